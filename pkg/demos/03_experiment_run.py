"""A seeded experiment through the harness, as the CLI would run it.

Writes report.json and the CSV tables to ./demo_out and shows that a second
identical run reproduces the same hash.
"""

import json
from pathlib import Path

from relapprox.harness import ExperimentConfig, run

config = {
    "generator": "uniform_square", "n": 200, "family": "halfplanes2d",
    "p": "1/16", "eps": "1/2", "seeds": [0, 1, 2, 3, 4],
    "constants": {"core_on_whole_set": True}, "profile_ks": [1, 2, 4, 8],
    "out_dir": "demo_out",
}
report = run(ExperimentConfig.from_dict(config))
print(json.dumps(report.summary, indent=2))
print(Path("demo_out/comparison.csv").read_text())

again = run(ExperimentConfig.from_dict({**config, "out_dir": "demo_out_again"}))
print("same hash on rerun:", again.reproducibility_hash == report.reproducibility_hash)
