import simplecli
from ncse.commands import configure_logging, exit_on_error, report, run_pca
from ncse.config import RunConfig


@simplecli.wrap
def main(
    out: None | str = None,  # Projection CSV; a .json sidecar goes beside it
    manifest: None | str = None,  # Dataset manifest JSON
    model: None | str = None,  # Encoder directory, for encoder centers
    centers: str = "encoder",  # Center source: encoder, etf or random
    n: None | int = None,  # Number of stand-in centers
    dim: None | int = None,  # Latent dimension of stand-in centers (64)
    samples: int = 200,  # Expansion samples projected with the centers
    k: int = 2,  # Number of principal components
    kappa: None | float = None,  # vMF concentration (default 50)
    p_center: None | float = None,  # Probability of the exact center (0.5)
    seed: None | int = None,  # Run seed (default 0)
    config: None | str = None,  # JSON run config; flags override it
    debug: bool = False,
) -> None:
    configure_logging(debug)
    with exit_on_error():
        cfg = RunConfig.resolve(
            config,
            out=out,
            manifest=manifest,
            latent_dim=dim,
            kappa=kappa,
            p_center=p_center,
            seed=seed,
        )
        report(run_pca(cfg, samples, k, centers, model, n))
