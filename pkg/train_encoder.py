import simplecli
from ncse.commands import (
    configure_logging,
    exit_on_error,
    report,
    run_train_encoder,
)
from ncse.config import RunConfig


@simplecli.wrap
def main(
    manifest: None | str = None,  # Dataset manifest JSON
    out: None | str = None,  # Directory for encoder.ncse, sidecar and trace
    latent_dim: None | int = None,  # Latent dimension p (default 64)
    epochs: None | int = None,  # Training epochs (default 2000)
    lr: None | float = None,  # Adam learning rate (default 0.01)
    window_s: None | float = None,  # Window length in seconds (default 2.0)
    stride_s: None | float = None,  # Window stride in seconds (default 0.5)
    batch_size: None | int = None,  # Minibatch size (default 64)
    samples_per_center: None | int = None,  # Uniformity probes per class
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
            latent_dim=latent_dim,
            epochs=epochs,
            lr=lr,
            window_s=window_s,
            stride_s=stride_s,
            batch_size=batch_size,
            samples_per_center=samples_per_center,
            seed=seed,
        )
        report(run_train_encoder(cfg))
