"""End-to-end pipeline run on a generated miniature corpus.

Builds a corpus on disk, writes a config file, then drives every stage
the same way the CLI does.  Equivalent shell usage:

    riskbench run all --config demo_config.json

Run: python demos/08_full_pipeline.py
"""

import json
import random
import tempfile
from pathlib import Path

from riskbench.pipeline import PipelineConfig, run_all

TERMS = {
    "Financial": ["liquidity", "volatility", "impairment", "refinancing",
                  "insolvency", "devaluation", "restatement"],
    "Operational": ["cybersecurity", "ransomware", "outages", "logistics",
                    "malware", "phishing", "downtime"],
    "Strategic": ["competitors", "innovation", "acquisitions", "reputation",
                  "divestitures", "boycotts", "consolidation"],
    "Legal and Compliance": ["lawsuits", "sanctions", "patents", "infringement",
                             "trademarks", "settlements", "plaintiffs"],
    "External and Hazard": ["hurricanes", "pandemic", "inflation", "drought",
                            "earthquakes", "wildfires", "terrorism"],
}

rng = random.Random(2024)
workdir = Path(tempfile.mkdtemp(prefix="riskbench_demo_"))
docs_dir = workdir / "docs"
docs_dir.mkdir()

rows = []
classes = list(TERMS)
years = [2019, 2020, 2021, 2022, 2023, 2024]
for d in range(30):
    doc_id = f"demo{d:03d}"
    year = years[d % len(years)]
    cls = classes[d % len(classes)]
    lines = []
    for _ in range(8):
        picked = rng.sample(TERMS[cls], k=rng.choice([3, 4]))
        lines.append(f"The {picked[0]} and {picked[1]} with {' '.join(picked[2:])} persist.")
    (docs_dir / f"{doc_id}.txt").write_text("\n".join(lines), encoding="utf-8")
    rows.append(f"{doc_id},democo,{year},docs/{doc_id}.txt")

meta = workdir / "metadata.csv"
meta.write_text("doc_id,company_id,release_year,path\n" + "\n".join(rows) + "\n")

config = PipelineConfig(
    corpus_metadata=str(meta),
    output_dir=str(workdir / "out"),
    attention_fallback="uniform",
    K=5,
    lda_alpha=0.5,
    lda_iterations=100,
    lda_burn_in=30,
    infer_iterations=40,
    infer_burn_in=10,
)
(workdir / "demo_config.json").write_text(json.dumps(config.to_dict(), indent=2))

print(f"workdir: {workdir}")
for stage, info in run_all(config).items():
    print(f"  {stage:<10} {info}")

metrics = json.loads((workdir / "out" / "metrics.json").read_text())
print("\nmetrics report:")
print(f"  Accuracy:      {metrics['Accuracy']:.3f}")
print(f"  Macro-F1:      {metrics['Macro-F1']:.3f}")
print(f"  Eff. # Topics: {metrics['Eff. # Topics']['mean']:.2f} "
      f"+/- {metrics['Eff. # Topics']['std']:.2f}")
print(f"\nplot data: {sorted(p.name for p in (workdir / 'out' / 'plots').iterdir())}")
