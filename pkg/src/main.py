from pathlib import Path
from typing import Optional

import typer
from dotenv import load_dotenv

from cli.commands import execute

load_dotenv()

app = typer.Typer(add_completion=False, no_args_is_help=True,
                  help="Numerical symplectic toolkit: form checks, orbit lattices, canonical and Darboux charts.")

CONFIG_HELP = "Config document describing the system and the task."
OUT_HELP = "Output directory (defaults to [output] dir, then SYMPLECTIC_OUTPUT_DIR)."
SEED_HELP = "Seed for every random sample (overrides [task] seed)."


def _register(name: str, help_text: str) -> None:
    def command(
        config: Path = typer.Option(..., "--config", exists=True, dir_okay=False, readable=True, help=CONFIG_HELP),
        out: Optional[Path] = typer.Option(None, "--out", help=OUT_HELP),
        seed: Optional[int] = typer.Option(None, "--seed", help=SEED_HELP),
    ):
        raise typer.Exit(code=execute(name, config, out, seed))

    app.command(name=name, help=help_text)(command)


_register("verify", "Closedness, nondegeneracy and commutation of the system on a grid.")
_register("orbit", "Period lattice and orbit topology at the task point.")
_register("linearize", "Canonical (action-angle) coordinates near the task point, with residuals.")
_register("darboux", "Darboux chart of the form near the task point, with residuals.")


@app.command("report", help="Bundle the outputs of earlier commands into report.txt.")
def report(
    config: Optional[Path] = typer.Option(None, "--config", exists=True, dir_okay=False, help=CONFIG_HELP),
    out: Optional[Path] = typer.Option(None, "--out", help=OUT_HELP),
    seed: Optional[int] = typer.Option(None, "--seed", help=SEED_HELP),
):
    raise typer.Exit(code=execute("report", config, out, seed))


if __name__ == "__main__":
    app()
