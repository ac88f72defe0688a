import simplecli
from ncse.commands import configure_logging, exit_on_error, report, run_score
from ncse.config import RunConfig


@simplecli.wrap
def main(
    generated: str,  # Clip file or manifest holding the generated frames
    manifest: None | str = None,  # Reference dataset manifest JSON
    out: None | str = None,  # Coverage report JSON
    histogram: None | str = None,  # Optional histogram CSV
    trajectories: None | str = None,  # Optional root trajectory CSV
    clip: None | str = None,  # Reference clip to report completeness for
    threshold: None | float = None,  # Coverage threshold (default 0.5)
    alpha_jp: None | float = None,  # Joint kernel sharpness (default 2.0)
    alpha_v: None | float = None,  # Velocity kernel sharpness (default 0.1)
    config: None | str = None,  # JSON run config; flags override it
    debug: bool = False,
) -> None:
    configure_logging(debug)
    with exit_on_error():
        cfg = RunConfig.resolve(
            config,
            manifest=manifest,
            out=out,
            threshold=threshold,
            alpha_jp=alpha_jp,
            alpha_v=alpha_v,
        )
        report(run_score(cfg, generated, histogram, clip, trajectories))
