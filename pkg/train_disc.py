import simplecli
from ncse.commands import (
    configure_logging,
    exit_on_error,
    report,
    run_train_disc,
)
from ncse.config import RunConfig


@simplecli.wrap
def main(
    manifest: None | str = None,  # Dataset manifest JSON
    out: None | str = None,  # Directory for discriminator files and trace
    model: None | str = None,  # Encoder directory, for encoder centers
    centers: str = "encoder",  # Center source: encoder, etf or random
    dim: None | int = None,  # Latent dimension of stand-in centers (64)
    steps: None | int = None,  # Training steps (default 2000)
    lr: None | float = None,  # Adam learning rate (default 0.001)
    w_gp: None | float = None,  # Gradient-penalty weight (default 5)
    kappa: None | float = None,  # vMF concentration (default 50)
    p_center: None | float = None,  # Probability of the exact center (0.5)
    noise_sigma: None | float = None,  # Policy stand-in noise (default 0.1)
    interval_s: None | float = None,  # Progress stage length (default 0.5)
    batch_size: None | int = None,  # Samples per batch and kind (64)
    seed: None | int = None,  # Run seed (default 0)
    config: None | str = None,  # JSON run config; flags override it
    debug: bool = False,
) -> None:
    configure_logging(debug)
    with exit_on_error():
        cfg = RunConfig.resolve(
            config,
            manifest=manifest,
            out=out,
            latent_dim=dim,
            steps=steps,
            disc_lr=lr,
            w_gp=w_gp,
            kappa=kappa,
            p_center=p_center,
            noise_sigma=noise_sigma,
            interval_s=interval_s,
            batch_size=batch_size,
            seed=seed,
        )
        report(run_train_disc(cfg, centers, model))
