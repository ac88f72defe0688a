import simplecli
from ncse.commands import configure_logging, exit_on_error, report, run_pe_dump
from ncse.config import RunConfig


@simplecli.wrap
def main(
    out: None | str = None,  # CSV file of encodings, one row per stage
    stages: int = 64,  # Number of stage indices k to dump
    dim: int = 32,  # Encoding dimension; must be even
    base: float = 10000.0,  # Frequency base
    debug: bool = False,
) -> None:
    configure_logging(debug)
    with exit_on_error():
        cfg = RunConfig.resolve(None, out=out)
        report(run_pe_dump(cfg, stages, dim, base))
