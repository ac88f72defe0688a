import simplecli
from ncse.commands import (
    configure_logging,
    exit_on_error,
    report,
    run_uniformity,
)
from ncse.config import RunConfig


@simplecli.wrap
def main(
    out: None | str = None,  # JSON file for counts and variance
    centers: str = "etf",  # Center source: encoder, etf or random
    n: None | int = None,  # Number of stand-in centers
    dim: None | int = None,  # Latent dimension of stand-in centers (64)
    model: None | str = None,  # Encoder directory, for encoder centers
    manifest: None | str = None,  # Dataset manifest JSON
    samples_per_center: None | int = None,  # Uniform samples per center
    seed: None | int = None,  # Run seed (default 0)
    config: None | str = None,  # JSON run config; flags override it
    debug: bool = False,
) -> None:
    configure_logging(debug)
    with exit_on_error():
        cfg = RunConfig.resolve(
            config,
            out=out,
            latent_dim=dim,
            manifest=manifest,
            samples_per_center=samples_per_center,
            seed=seed,
        )
        report(run_uniformity(cfg, centers, n, model))
