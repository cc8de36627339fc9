"""Regenerate the synthetic commit histories shipped with the corpus.

Defective classes get dense, recent, fix-heavy activity; clean classes get
sparse older churn. Output is deterministic so reruns leave the corpus
byte-identical.
"""

from __future__ import annotations

import json
import pathlib
import random

NOW = 1755734400  # fixed reference instant, also used by the risk scorer docs
DAY = 86400

AUTHORS = ["vkm", "awright", "tsolari", "mpetr", "jchu", "dkang"]

# program -> (defective classes, clean classes)
PROGRAMS = {
    "math94": (["Math94"], []),
    "deepnest": (["Filter"], []),
    "ledger": (["Balance"], ["Account", "Journal", "Rate", "Audit", "Fmt"]),
    "router": (["Route"], ["Prefix", "Hop", "Table", "Mtu", "Flap"]),
    "codec": (["Decoder"], ["Crc", "Escape", "Varint", "Pad", "Seq"]),
    "scheduler": (["Quota"], ["Clock", "Lease", "Backoff", "Prio", "Shard"]),
    "parserlib": (["Scanner"], ["Token", "Bracket", "Pos", "Intern"]),
    "metrics": (["Window"], ["Ring", "Ewma", "Reservoir", "Quantile", "Export"]),
}


def records_for(program: str, rng: random.Random) -> list[dict]:
    defective, clean = PROGRAMS[program]
    records = []
    for cls in defective:
        # burst of recent fix activity in the last ~90 days
        for _ in range(rng.randint(9, 13)):
            age = rng.randint(2, 90) * DAY + rng.randint(0, DAY - 1)
            records.append(
                {
                    "class": cls,
                    "ts": NOW - age,
                    "author": rng.choice(AUTHORS[:4]),
                    "fix": rng.random() < 0.7,
                }
            )
        # a little older background churn
        for _ in range(rng.randint(2, 4)):
            age = rng.randint(200, 700) * DAY
            records.append(
                {
                    "class": cls,
                    "ts": NOW - age,
                    "author": rng.choice(AUTHORS),
                    "fix": rng.random() < 0.2,
                }
            )
    for cls in clean:
        for _ in range(rng.randint(2, 5)):
            age = rng.randint(120, 700) * DAY + rng.randint(0, DAY - 1)
            records.append(
                {
                    "class": cls,
                    "ts": NOW - age,
                    "author": rng.choice(AUTHORS),
                    "fix": rng.random() < 0.15,
                }
            )
    records.sort(key=lambda r: (r["ts"], r["class"], r["author"]))
    return records


def main() -> None:
    out = pathlib.Path(__file__).resolve().parent.parent / "src/sbst/corpus_data/history"
    out.mkdir(exist_ok=True)
    for program in sorted(PROGRAMS):
        rng = random.Random(f"history:{program}")
        path = out / f"{program}.jsonl"
        lines = [json.dumps(r, sort_keys=True) for r in records_for(program, rng)]
        path.write_text("\n".join(lines) + "\n")
        print(f"{path.name}: {len(lines)} records")


if __name__ == "__main__":
    main()
