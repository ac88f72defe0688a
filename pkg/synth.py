import simplecli
from ncse.commands import configure_logging, exit_on_error, report, run_synth
from ncse.config import RunConfig


@simplecli.wrap
def main(
    out: None | str = None,  # Directory to write manifest.json and clips to
    clips: int = 8,  # Number of clips to generate
    joints: int = 4,  # Joints per frame
    fps: float = 30.0,  # Frames per second
    min_duration: float = 1.0,  # Shortest clip in seconds
    max_duration: float = 6.0,  # Longest clip in seconds
    seed: None | int = None,  # Run seed (default 0)
    config: None | str = None,  # JSON run config; flags override it
    debug: bool = False,
) -> None:
    configure_logging(debug)
    with exit_on_error():
        cfg = RunConfig.resolve(config, out=out, seed=seed)
        report(
            run_synth(cfg, clips, joints, fps, min_duration, max_duration)
        )
