"""Run every preset end to end, reusing optimised channels across experiments.

    python scripts/reproduce_all.py --out results --jobs 1

Order: bridge (both norms), purifier, timestep sweep on 3+4, then the
separation study (B-only readout over several sizes, entangled and separable
bridge) and the depolarisation study. Parameter records from the first two
steps are fed into the later configs instead of re-optimising.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from bridgeqrc.cli import main as cli

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def derived(src: str, out: Path, **sections) -> Path:
    data = yaml.safe_load((CONFIGS / src).read_text()) or {}
    for key, values in sections.items():
        data.setdefault(key, {}).update(values)
    path = out / f"derived_{src}"
    path.write_text(yaml.safe_dump(data, sort_keys=True))
    return path


def run(*args: str) -> None:
    print("+ bridgeqrc", " ".join(args), flush=True)
    code = cli(list(args))
    if code != 0:
        sys.exit(code)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("results"))
    parser.add_argument("--jobs", type=str, default="1")
    args = parser.parse_args()
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    j = ["--jobs", args.jobs, "-v"]

    run("optimize-bridge", "--config", str(CONFIGS / "fig5_bridge.yaml"), "--out", str(out / "bridge"), *j)
    run(
        "optimize-bridge",
        "--config",
        str(CONFIGS / "fig5_bridge_max_column.yaml"),
        "--out",
        str(out / "bridge_max_column"),
        *j,
    )
    run("diagnostics", str(out / "bridge" / "bridge_params.json"), "--out", str(out / "bridge"))
    run("optimize-purifier", "--config", str(CONFIGS / "fig6_purifier.yaml"), "--out", str(out / "purifier"), *j)

    theta = str(out / "bridge" / "bridge_params.json")
    gamma = str(out / "purifier" / "purifier_params.json")
    channels = dict(bridge={"theta": theta}, purifier={"gamma": gamma})

    sweep_cfg = derived("fig4_noise.yaml", out, reservoir={"tau": "sweep"}, **channels)
    run("sweep-timestep", "--config", str(sweep_cfg), "--out", str(out / "sweep"), *j)
    tau = json.loads((out / "sweep" / "manifest_sweep-timestep.json").read_text())["selected_tau"]

    cfg = derived("fig4_noise.yaml", out, reservoir={"tau": tau}, **channels)
    run("run-stm", "--config", str(cfg), "--out", str(out / "noise"), *j)
    cfg = derived("fig3_separation.yaml", out, reservoir={"tau": tau}, **channels)
    run("run-stm", "--config", str(cfg), "--out", str(out / "separation"), *j)
    cfg = derived("fig3_separable.yaml", out, reservoir={"tau": tau})
    run("run-stm", "--config", str(cfg), "--out", str(out / "separable"), *j)


if __name__ == "__main__":
    main()
