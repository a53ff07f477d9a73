"""Stage orchestration: file-based pipeline with provenance manifests.

Stages exchange artifacts on disk so sidecar processes (the attention /
embedding exporter) can plug in through the same JSONL contracts.  Every
artifact embeds a meta header carrying the config hash and the sha256 of
each upstream artifact; the provenance chain of any output is therefore
verifiable.  Outputs are written atomically (temp file + rename), sorted
by sentence_id, and contain no timestamps, so a stage re-run with
identical inputs and config is byte-identical.  Wall time and row counts
land in a per-stage run manifest next to the artifacts.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import corpus, enhancer, evaluation, labeler, salience, splits, taxonomy, topics

logger = logging.getLogger(__name__)

STAGES = (
    "ingest",
    "salience",
    "enhance",
    "label",
    "split",
    "train-lda",
    "theta",
    "eval",
    "report",
)

OUTPUT_DIR_ENV = "RISKBENCH_OUTPUT_DIR"


class UsageError(Exception):
    """Bad invocation (unknown stage, malformed flags)."""


class DataError(Exception):
    """Missing upstream artifact or malformed data file."""


@dataclass
class PipelineConfig:
    """All knobs, defaulting to the frozen documented settings."""

    corpus_metadata: str | None = None
    taxonomy_path: str | None = None
    dictionary_path: str | None = None
    attention_path: str | None = None
    embeddings_path: str | None = None
    term_embeddings_path: str | None = None
    output_dir: str = "out"

    lambda_: float = salience.DEFAULT_LAMBDA
    epsilon: float = salience.DEFAULT_EPSILON
    yake_max_ngram: int = 3
    yake_top_n: int = 20
    attention_fallback: str = "uniform"

    beta_uni: float = enhancer.DEFAULT_BETA_UNI
    beta_col: float = enhancer.DEFAULT_BETA_COL
    cap: float = enhancer.DEFAULT_CAP
    fuzzy: bool = False

    m: int = labeler.DEFAULT_TOP_M
    backoff_enabled: bool = False
    backoff_k: int = labeler.DEFAULT_BACKOFF_K
    backoff_threshold: float = labeler.DEFAULT_BACKOFF_THRESHOLD
    binary_weights: bool = False
    compact_labels: bool = False

    train_max_year: int = 2022
    dev_year: int = 2023
    test_years: tuple[int, int] = (2024, 2025)
    split_csv: bool = False

    K: int = topics.DEFAULT_K
    lda_alpha: float | None = None
    lda_beta: float = topics.DEFAULT_BETA
    lda_iterations: int = topics.DEFAULT_ITERATIONS
    lda_burn_in: int = topics.DEFAULT_BURN_IN
    infer_iterations: int = 100
    infer_burn_in: int = 50
    theta_epsilon: float = 1e-9
    tau: float = topics.DEFAULT_TAU
    theta_source: str = "lda"
    theta_input: str | None = None
    centroids_path: str | None = None

    probe_l2: float = evaluation.DEFAULT_L2
    probe_seed: int = 0
    eval_split: str = "test"
    bertscore_baseline: float = 0.0
    bertscore_representatives: int = evaluation.DEFAULT_REPRESENTATIVES
    bertscore_members: int = evaluation.DEFAULT_MEMBERS
    bertscore_seed: int = 0

    seeds: tuple[int, ...] = (0,)
    jobs: int = 1

    def __post_init__(self) -> None:
        env_dir = os.environ.get(OUTPUT_DIR_ENV)
        if env_dir:
            self.output_dir = env_dir

    def boundaries(self) -> splits.SplitBoundaries:
        return splits.SplitBoundaries(
            train_max_year=self.train_max_year,
            dev_year=self.dev_year,
            test_years=tuple(self.test_years),
        )

    def boost_config(self) -> enhancer.BoostConfig:
        return enhancer.BoostConfig(
            beta_uni=self.beta_uni, beta_col=self.beta_col, cap=self.cap, fuzzy=self.fuzzy
        )

    def labeler_config(self) -> labeler.LabelerConfig:
        return labeler.LabelerConfig(
            m=self.m,
            backoff_enabled=self.backoff_enabled,
            backoff_k=self.backoff_k,
            backoff_threshold=self.backoff_threshold,
            binary_weights=self.binary_weights,
        )

    def to_dict(self) -> dict:
        obj = dataclasses.asdict(self)
        obj["test_years"] = list(self.test_years)
        obj["seeds"] = list(self.seeds)
        return obj

    # Location fields do not change what is computed; leaving them out of
    # the hash keeps reruns into different directories byte-identical.
    # Input *content* is covered by the per-artifact input hashes.
    _UNHASHED_FIELDS = frozenset(
        {
            "corpus_metadata",
            "taxonomy_path",
            "dictionary_path",
            "attention_path",
            "embeddings_path",
            "term_embeddings_path",
            "theta_input",
            "centroids_path",
            "output_dir",
            "jobs",
        }
    )

    def config_hash(self) -> str:
        obj = {
            k: v for k, v in self.to_dict().items() if k not in self._UNHASHED_FIELDS
        }
        payload = json.dumps(obj, sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    @classmethod
    def from_dict(cls, obj: dict) -> "PipelineConfig":
        obj = dict(obj)
        if "lambda" in obj:  # ergonomic alias: lambda is a Python keyword
            obj["lambda_"] = obj.pop("lambda")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(obj)
        if "test_years" in kwargs:
            kwargs["test_years"] = tuple(kwargs["test_years"])
        if "seeds" in kwargs:
            kwargs["seeds"] = tuple(kwargs["seeds"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise UsageError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from exc
        return cls.from_dict(obj)


# --------------------------------------------------------------------------
# Artifact IO
# --------------------------------------------------------------------------


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_write(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    os.replace(tmp, path)


def _meta(cfg: PipelineConfig, stage: str, inputs: dict[str, Path | str], rows: int) -> dict:
    # Path values are hashed by content; str values are precomputed hashes.
    return {
        "stage": stage,
        "config_hash": cfg.config_hash(),
        "inputs": {
            name: (_sha256_file(p) if isinstance(p, Path) else p)
            for name, p in sorted(inputs.items())
        },
        "rows": rows,
    }


def _write_jsonl(
    path: Path, records: list[dict], cfg: PipelineConfig, stage: str, inputs: dict[str, Path]
) -> None:
    lines = [json.dumps({"_meta": _meta(cfg, stage, inputs, len(records))}, sort_keys=True)]
    lines += [json.dumps(r, ensure_ascii=False) for r in records]
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_json(
    path: Path, obj: dict, cfg: PipelineConfig, stage: str, inputs: dict[str, Path], rows: int
) -> None:
    obj = {"_meta": _meta(cfg, stage, inputs, rows), **obj}
    _atomic_write(path, json.dumps(obj, indent=2, ensure_ascii=False, sort_keys=False) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    out = []
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: invalid JSON at line {line_no}: {exc}") from exc
            if "_meta" in obj:
                continue
            out.append(obj)
    return out


def _require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise DataError(f"missing artifact {path.name}; run the {producer} stage first")
    return path


def _paths(cfg: PipelineConfig) -> dict[str, Path]:
    out = Path(cfg.output_dir)
    return {
        "sentences": out / "sentences.jsonl",
        "dedup_log": out / "dedup_log.json",
        "salience": out / "salience.jsonl",
        "enhanced": out / "enhanced.jsonl",
        "labels": out / "labels.jsonl",
        "splits": out / "splits.json",
        "lda_model": out / "lda_model.json",
        "theta": out / "theta.jsonl",
        "metrics": out / "metrics.json",
        "plots": out / "plots",
    }


def _run_manifest(cfg: PipelineConfig, stage: str, started: float, info: dict) -> None:
    path = Path(cfg.output_dir) / f"run_{stage.replace('-', '_')}.json"
    payload = {
        "stage": stage,
        "config_hash": cfg.config_hash(),
        "wall_time_s": round(time.monotonic() - started, 3),
        **info,
    }
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# Shared loading helpers
# --------------------------------------------------------------------------


@lru_cache(maxsize=4)
def _load_matching_assets(
    taxonomy_path: str | None, dictionary_path: str | None, fuzzy: bool
) -> tuple[taxonomy.Taxonomy, list[taxonomy.CollocationPattern], taxonomy.CollocationMatcher]:
    tax = taxonomy.Taxonomy.load(taxonomy_path)
    dictionary = taxonomy.load_dictionary(dictionary_path)
    patterns = taxonomy.compile_patterns(tax, dictionary, fuzzy=fuzzy)
    return tax, patterns, taxonomy.CollocationMatcher(patterns)


def _load_sentences(cfg: PipelineConfig) -> list[corpus.SentenceRecord]:
    path = _require(_paths(cfg)["sentences"], "ingest")
    records = [corpus.record_from_dict(o) for o in _read_jsonl(path)]
    return records


# --------------------------------------------------------------------------
# Stages
# --------------------------------------------------------------------------


def stage_ingest(cfg: PipelineConfig) -> dict:
    if not cfg.corpus_metadata:
        raise UsageError("ingest requires corpus_metadata in the config")
    started = time.monotonic()
    meta_path = Path(cfg.corpus_metadata)
    if not meta_path.exists():
        raise DataError(f"corpus metadata not found: {meta_path}")
    docs = corpus.read_metadata(meta_path)
    records: list[corpus.SentenceRecord] = []
    for doc in docs:
        records.extend(corpus.process_document(doc))
    records.sort(key=lambda r: r.sentence_id)
    kept, dropped = corpus.deduplicate(records)
    paths = _paths(cfg)
    _write_jsonl(
        paths["sentences"],
        [corpus.record_to_dict(r) for r in kept],
        cfg,
        "ingest",
        {"metadata": meta_path},
    )
    _write_json(
        paths["dedup_log"],
        {"dropped": [{"sentence_id": a, "duplicate_of": b} for a, b in dropped]},
        cfg,
        "ingest",
        {"metadata": meta_path},
        rows=len(dropped),
    )
    info = {"documents": len(docs), "sentences": len(kept), "deduplicated": len(dropped)}
    _run_manifest(cfg, "ingest", started, info)
    return info


def _salience_one(
    record: corpus.SentenceRecord,
    vector: salience.AttentionVector | None,
    cfg: PipelineConfig,
    effective_lambda: float,
) -> dict:
    if vector is None:
        vector = salience.attention_fallback(record, cfg.attention_fallback)
    sal = salience.compute_salience(
        record,
        vector,
        lambda_=effective_lambda,
        epsilon=cfg.epsilon,
        max_ngram=cfg.yake_max_ngram,
        top_n=cfg.yake_top_n,
    )
    return salience.salience_to_dict(sal)


def _salience_chunk(args: tuple) -> list[dict]:
    chunk, vectors, cfg_dict, effective_lambda = args
    cfg = PipelineConfig.from_dict(cfg_dict)
    out = []
    for obj in chunk:
        record = corpus.record_from_dict(obj)
        vec_scores = vectors.get(record.sentence_id)
        vector = (
            salience.AttentionVector(record.sentence_id, vec_scores)
            if vec_scores is not None
            else None
        )
        out.append(_salience_one(record, vector, cfg, effective_lambda))
    return out


def stage_salience(cfg: PipelineConfig) -> dict:
    """Keyphrase + blend chain per sentence.

    Lambda is forced to 0 only when no attention file exists at all and
    the fallback mode is "none".  With a partial attention file, missing
    sentences fall back per the configured mode (uniform 0.5 or zeros)
    while lambda stays as configured; coverage is reported in the run
    manifest.
    """
    started = time.monotonic()
    paths = _paths(cfg)
    records = _load_sentences(cfg)
    inputs = {"sentences": paths["sentences"]}

    vectors: dict[str, salience.AttentionVector] = {}
    rejected: list[str] = []
    effective_lambda = cfg.lambda_
    attention_path = Path(cfg.attention_path) if cfg.attention_path else None
    if attention_path and attention_path.exists():
        by_id = {r.sentence_id: r for r in records}
        vectors, rejected = salience.read_attention_jsonl(attention_path, by_id)
        inputs["attention"] = attention_path
    elif cfg.attention_fallback == "none":
        effective_lambda = 0.0
        logger.warning(
            "no attention available and fallback mode is 'none': "
            "forcing lambda to 0 (pure keyphrase signal)"
        )
    else:
        logger.warning(
            "no attention available: using '%s' fallback", cfg.attention_fallback
        )

    if cfg.jobs > 1:
        raw = [corpus.record_to_dict(r) for r in records]
        chunk_size = max(1, len(raw) // (cfg.jobs * 4) or 1)
        chunks = [raw[i : i + chunk_size] for i in range(0, len(raw), chunk_size)]
        vec_payload = {sid: v.scores for sid, v in vectors.items()}
        args = [(c, vec_payload, cfg.to_dict(), effective_lambda) for c in chunks]
        out: list[dict] = []
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            for part in pool.map(_salience_chunk, args):
                out.extend(part)
    else:
        out = [
            _salience_one(r, vectors.get(r.sentence_id), cfg, effective_lambda)
            for r in records
        ]
    out.sort(key=lambda o: o["sentence_id"])
    _write_jsonl(paths["salience"], out, cfg, "salience", inputs)
    info = {
        "sentences": len(out),
        "attention_records": len(vectors),
        "attention_rejected": len(rejected),
        "effective_lambda": effective_lambda,
    }
    _run_manifest(cfg, "salience", started, info)
    return info


def stage_enhance(cfg: PipelineConfig) -> dict:
    started = time.monotonic()
    paths = _paths(cfg)
    records = {r.sentence_id: r for r in _load_sentences(cfg)}
    sal_path = _require(paths["salience"], "salience")
    tax, patterns, matcher = _load_matching_assets(
        cfg.taxonomy_path, cfg.dictionary_path, cfg.fuzzy
    )
    boost_cfg = cfg.boost_config()

    out = []
    for obj in _read_jsonl(sal_path):
        sal = salience.salience_from_dict(obj)
        record = records.get(sal.sentence_id)
        if record is None:
            raise DataError(f"salience record {sal.sentence_id} has no sentence")
        uni = taxonomy.match_unigrams(record, tax)
        col = taxonomy.match_collocations(record, matcher)
        enhanced = enhancer.enhance(sal, uni, col, boost_cfg)
        row = salience.salience_to_dict(enhanced)
        row["unigram_matches"] = [[idx, list(subs)] for idx, subs in uni]
        row["colloc_matches"] = [
            {
                "pattern_id": m.pattern_id,
                "token_span": list(m.token_span),
                "char_span": list(m.char_span),
                "matched_variant": m.matched_variant,
            }
            for m in col
        ]
        out.append(row)
    out.sort(key=lambda o: o["sentence_id"])
    pattern_hash = hashlib.sha256(taxonomy.serialize_patterns(patterns)).hexdigest()
    _write_jsonl(
        paths["enhanced"],
        out,
        cfg,
        "enhance",
        {
            "sentences": paths["sentences"],
            "salience": sal_path,
            "patterns": pattern_hash,
        },
    )
    info = {"sentences": len(out), "patterns": len(patterns)}
    _run_manifest(cfg, "enhance", started, info)
    return info


def stage_label(cfg: PipelineConfig) -> dict:
    started = time.monotonic()
    paths = _paths(cfg)
    records = {r.sentence_id: r for r in _load_sentences(cfg)}
    enh_path = _require(paths["enhanced"], "enhance")
    tax, patterns, _ = _load_matching_assets(
        cfg.taxonomy_path, cfg.dictionary_path, cfg.fuzzy
    )
    pattern_subcats = labeler.pattern_subcategories(patterns)
    label_cfg = cfg.labeler_config()
    term_embeddings = None
    if cfg.backoff_enabled and cfg.term_embeddings_path:
        term_embeddings = labeler.load_term_embeddings(cfg.term_embeddings_path)

    out = []
    for obj in _read_jsonl(enh_path):
        sal = salience.salience_from_dict(obj)
        record = records.get(sal.sentence_id)
        if record is None:
            raise DataError(f"enhanced record {sal.sentence_id} has no sentence")
        uni = [(idx, tuple(subs)) for idx, subs in obj.get("unigram_matches", [])]
        col = [
            taxonomy.SpanMatch(
                pattern_id=m["pattern_id"],
                token_span=tuple(m["token_span"]),
                char_span=tuple(m["char_span"]),
                matched_variant=m["matched_variant"],
            )
            for m in obj.get("colloc_matches", [])
        ]
        ev = labeler.label_sentence(
            record, sal, uni, col, pattern_subcats, tax, label_cfg, term_embeddings
        )
        out.append(labeler.evidence_to_dict(ev, compact=cfg.compact_labels))
    out.sort(key=lambda o: o["sentence_id"])
    pattern_hash = hashlib.sha256(taxonomy.serialize_patterns(patterns)).hexdigest()
    _write_jsonl(
        paths["labels"],
        out,
        cfg,
        "label",
        {"enhanced": enh_path, "patterns": pattern_hash},
    )
    info = {
        "sentences": len(out),
        "labeled": sum(1 for o in out if any(o["macro_labels"])),
        "subcategories": tax.subcategory_names,
        "macro_classes": tax.macro_classes,
    }
    _run_manifest(cfg, "label", started, info)
    return info


def stage_split(cfg: PipelineConfig) -> dict:
    started = time.monotonic()
    paths = _paths(cfg)
    records = _load_sentences(cfg)
    manifest = splits.assign_splits(records, cfg.boundaries())
    splits.check_leakage(manifest, records)
    doc_ids = {r.sentence_id: r.doc_id for r in records}
    payload = manifest.to_dict()
    payload["stats"] = splits.split_stats(manifest, doc_ids)
    _write_json(
        paths["splits"],
        payload,
        cfg,
        "split",
        {"sentences": paths["sentences"]},
        rows=len(manifest.assignments),
    )
    if cfg.split_csv:
        lines = ["sentence_id,split"]
        lines += [f"{sid},{split}" for sid, split in sorted(manifest.assignments.items())]
        _atomic_write(Path(cfg.output_dir) / "splits_assignments.csv", "\n".join(lines) + "\n")
    info = {
        "assigned": len(manifest.assignments),
        "rejected": len(manifest.rejected),
        "violations": len(manifest.violation_log),
    }
    _run_manifest(cfg, "split", started, info)
    return info


def _load_manifest(cfg: PipelineConfig) -> splits.SplitManifest:
    path = _require(_paths(cfg)["splits"], "split")
    obj = json.loads(path.read_text(encoding="utf-8"))
    return splits.SplitManifest.from_dict(obj)


def stage_train_lda(cfg: PipelineConfig) -> dict:
    started = time.monotonic()
    paths = _paths(cfg)
    records = _load_sentences(cfg)
    manifest = _load_manifest(cfg)
    train_ids = set(manifest.sentence_ids("train"))
    train_records = [r for r in records if r.sentence_id in train_ids]
    if not train_records:
        raise DataError("no training sentences; check the split manifest")
    vocab = topics.build_vocab(train_records)
    bow = topics.docs_to_bow(train_records, vocab)
    seed = cfg.seeds[0]
    model = topics.lda_train(
        bow,
        K=cfg.K,
        vocab=vocab,
        alpha=cfg.lda_alpha,
        beta=cfg.lda_beta,
        iterations=cfg.lda_iterations,
        burn_in=cfg.lda_burn_in,
        seed=seed,
    )
    _write_json(
        paths["lda_model"],
        model.to_dict(),
        cfg,
        "train-lda",
        {"sentences": paths["sentences"], "splits": paths["splits"]},
        rows=len(bow),
    )
    info = {"train_sentences": len(bow), "vocab": len(vocab), "K": cfg.K, "seed": seed}
    _run_manifest(cfg, "train-lda", started, info)
    return info


def stage_theta(cfg: PipelineConfig) -> dict:
    started = time.monotonic()
    paths = _paths(cfg)
    inputs: dict[str, Path] = {}
    if cfg.theta_source == "lda":
        model_path = _require(paths["lda_model"], "train-lda")
        inputs["lda_model"] = model_path
        model_obj = json.loads(model_path.read_text(encoding="utf-8"))
        model_obj.pop("_meta", None)
        model = topics.LdaModel.from_dict(model_obj)
        records = _load_sentences(cfg)
        inputs["sentences"] = paths["sentences"]
        train_ids = set(model.doc_ids)
        mixtures = topics.train_thetas(model, cfg.theta_epsilon)
        held_out = [r for r in records if r.sentence_id not in train_ids]
        bow = topics.docs_to_bow(held_out, model.vocab)
        mixtures += topics.lda_infer(
            model,
            bow,
            iterations=cfg.infer_iterations,
            burn_in=cfg.infer_burn_in,
            seed=cfg.seeds[0],
            epsilon=cfg.theta_epsilon,
        )
    else:
        mixtures = _external_thetas(cfg, inputs)
    for m in mixtures:
        m.validate()
    rows = [
        {"sentence_id": m.sentence_id, "theta": m.theta}
        for m in sorted(mixtures, key=lambda m: m.sentence_id)
    ]
    _write_jsonl(paths["theta"], rows, cfg, "theta", inputs)
    info = {"mixtures": len(rows), "source": cfg.theta_source}
    _run_manifest(cfg, "theta", started, info)
    return info


def _external_thetas(cfg: PipelineConfig, inputs: dict[str, Path]) -> list[topics.TopicMixture]:
    """Adapters for external model outputs (counts/logits/embedding/one-hot)."""
    if not cfg.theta_input:
        raise UsageError(f"theta_source={cfg.theta_source!r} requires theta_input")
    path = Path(cfg.theta_input)
    if not path.exists():
        raise DataError(f"theta input not found: {path}")
    inputs["theta_input"] = path
    centroids = None
    if cfg.theta_source == "embedding":
        if not cfg.centroids_path:
            raise UsageError("embedding adapter requires centroids_path")
        cpath = Path(cfg.centroids_path)
        if not cpath.exists():
            raise DataError(f"centroids file not found: {cpath}")
        inputs["centroids"] = cpath
        centroids = json.loads(cpath.read_text(encoding="utf-8"))
    mixtures = []
    for line_no, obj in enumerate(_read_jsonl(path), start=1):
        sid = obj.get("sentence_id")
        if sid is None:
            raise DataError(f"{path}: record at line {line_no} lacks sentence_id")
        try:
            if cfg.theta_source == "counts":
                mixtures.append(
                    topics.theta_from_counts(obj["counts"], cfg.theta_epsilon, sid)
                )
            elif cfg.theta_source == "logits":
                mixtures.append(topics.theta_from_logits(obj["logits"], sid))
            elif cfg.theta_source == "embedding":
                mixtures.append(
                    topics.theta_from_embedding(
                        obj["embedding"],
                        centroids,
                        tau=cfg.tau,
                        outlier=bool(obj.get("outlier", False)),
                        sentence_id=sid,
                    )
                )
            elif cfg.theta_source == "one_hot":
                mixtures.append(topics.theta_one_hot(obj["topic"], cfg.K, sid))
            else:
                raise UsageError(f"unknown theta_source: {cfg.theta_source!r}")
        except KeyError as exc:
            raise DataError(f"{path}: record {sid} lacks field {exc}") from exc
    return mixtures


def stage_eval(cfg: PipelineConfig) -> dict:
    started = time.monotonic()
    paths = _paths(cfg)
    theta_path = _require(paths["theta"], "theta")
    labels_path = _require(paths["labels"], "label")
    manifest = _load_manifest(cfg)

    thetas = {
        o["sentence_id"]: topics.TopicMixture(o["sentence_id"], o["theta"])
        for o in _read_jsonl(theta_path)
    }
    labels = {
        o["sentence_id"]: o["macro_labels"] for o in _read_jsonl(labels_path)
    }

    def split_xy(name: str) -> tuple[list[topics.TopicMixture], np.ndarray]:
        ids = [s for s in manifest.sentence_ids(name) if s in thetas and s in labels]
        if not ids:
            raise DataError(f"no sentences with theta and labels in split {name!r}")
        return [thetas[s] for s in ids], np.asarray([labels[s] for s in ids], dtype=bool)

    train_m, train_y = split_xy("train")
    eval_m, eval_y = split_xy(cfg.eval_split)

    model = evaluation.probe_train(train_m, train_y, l2=cfg.probe_l2, seed=cfg.probe_seed)
    pred, _ = evaluation.probe_predict(model, eval_m)
    acc = evaluation.accuracy(pred, eval_y)
    mf1 = evaluation.macro_f1(pred, eval_y)
    per_class = evaluation.class_prf(pred, eval_y)
    neff_mean, neff_std = evaluation.neff_summary(eval_m)

    report = evaluation.MetricsReport(
        accuracy=acc,
        macro_f1=mf1,
        per_class=per_class,
        n_eff_mean=neff_mean,
        n_eff_std=neff_std,
        K=eval_m[0].K,
        split_id=manifest.content_hash(),
        config_hash=cfg.config_hash(),
    )

    inputs = {
        "theta": theta_path,
        "labels": labels_path,
        "splits": paths["splits"],
    }
    emb_path = Path(cfg.embeddings_path) if cfg.embeddings_path else None
    if emb_path and emb_path.exists():
        records = _load_sentences(cfg)
        by_id = {r.sentence_id: r for r in records}
        token_embeddings, emb_rejected = read_token_embeddings(emb_path, by_id)
        train_ids = set(manifest.sentence_ids("train"))
        idf = evaluation.compute_idf_table([r for r in records if r.sentence_id in train_ids])
        topics_map = evaluation.assign_topics(eval_m)
        per_topic, mean = evaluation.topic_bertscore(
            topics_map,
            token_embeddings,
            idf,
            baseline=cfg.bertscore_baseline,
            representatives=cfg.bertscore_representatives,
            members=cfg.bertscore_members,
            seed=cfg.bertscore_seed,
        )
        report.topic_bertscore_per_topic = per_topic
        report.topic_bertscore_mean = mean
        inputs["embeddings"] = emb_path
        if emb_rejected:
            logger.warning("%d embedding records rejected", len(emb_rejected))

    _write_json(paths["metrics"], report.to_dict(), cfg, "eval", inputs, rows=len(eval_m))
    info = {"Accuracy": acc, "Macro-F1": mf1, "eval_split": cfg.eval_split}
    _run_manifest(cfg, "eval", started, info)
    return info


def read_token_embeddings(
    path: Path, sentences: dict[str, corpus.SentenceRecord]
) -> tuple[dict[str, tuple[list[str], np.ndarray]], list[str]]:
    """Load token-level embeddings, validating alignment like attention."""
    accepted: dict[str, tuple[list[str], np.ndarray]] = {}
    rejected: list[str] = []
    for obj in _read_jsonl(path):
        sid = obj.get("sentence_id", "")
        sentence = sentences.get(sid)
        if sentence is None:
            rejected.append(sid)
            logger.warning("embedding record for unknown sentence %s", sid)
            continue
        expected = sentence.word_lowers()
        if obj.get("tokens") != expected or len(obj.get("vectors", [])) != len(expected):
            rejected.append(sid)
            logger.warning("embedding tokens misaligned for %s", sid)
            continue
        accepted[sid] = (expected, np.asarray(obj["vectors"], dtype=np.float64))
    return accepted, rejected


def stage_report(cfg: PipelineConfig) -> dict:
    started = time.monotonic()
    info = emit_plot_data(cfg)
    _run_manifest(cfg, "report", started, info)
    return info


def emit_plot_data(cfg: PipelineConfig) -> dict:
    """Write the three plot-data CSVs behind the summary figures."""
    paths = _paths(cfg)
    labels_path = _require(paths["labels"], "label")
    manifest = _load_manifest(cfg)
    records = _load_sentences(cfg)
    tax, _, _ = _load_matching_assets(cfg.taxonomy_path, cfg.dictionary_path, cfg.fuzzy)
    label_rows = _read_jsonl(labels_path)

    plots_dir = paths["plots"]
    plots_dir.mkdir(parents=True, exist_ok=True)
    stamp = f"# config_hash={cfg.config_hash()}"

    macro_counts = {name: 0 for name in tax.macro_classes}
    for row in label_rows:
        for name, flag in zip(tax.macro_classes, row["macro_labels"]):
            if flag:
                macro_counts[name] += 1
    total_macro = sum(macro_counts.values())
    lines = [stamp, "macro_class,count,share_percent"]
    for name in tax.macro_classes:
        share = 100.0 * macro_counts[name] / total_macro if total_macro else 0.0
        lines.append(f"{_csv_quote(name)},{macro_counts[name]},{share:.2f}")
    _atomic_write(plots_dir / "macro_prevalence.csv", "\n".join(lines) + "\n")

    sub_counts = {name: 0 for name in tax.subcategory_names}
    for row in label_rows:
        for name, score in zip(tax.subcategory_names, row["sub_scores"]):
            if score > 0:
                sub_counts[name] += 1
    total_sub = sum(sub_counts.values())
    lines = [stamp, "subcategory,macro_class,count,share_percent"]
    for sub in tax.subcategories:
        share = 100.0 * sub_counts[sub.name] / total_sub if total_sub else 0.0
        lines.append(
            f"{_csv_quote(sub.name)},{_csv_quote(sub.macro)},{sub_counts[sub.name]},{share:.2f}"
        )
    _atomic_write(plots_dir / "subcategory_prevalence.csv", "\n".join(lines) + "\n")

    years: dict[int, dict] = {}
    for record in records:
        entry = years.setdefault(record.release_year, {"docs": set(), "sentences": 0})
        entry["docs"].add(record.doc_id)
        entry["sentences"] += 1
    boundaries = cfg.boundaries()
    lines = [stamp, "year,disclosures,sentences,split_band"]
    for year in sorted(years):
        band = boundaries.split_for(year) or "none"
        entry = years[year]
        lines.append(f"{year},{len(entry['docs'])},{entry['sentences']},{band}")
    _atomic_write(plots_dir / "yearly_counts.csv", "\n".join(lines) + "\n")

    return {
        "macro_total": total_macro,
        "subcategory_total": total_sub,
        "years": len(years),
        "splits_hash": manifest.content_hash(),
    }


def _csv_quote(value: str) -> str:
    if "," in value or '"' in value:
        return '"' + value.replace('"', '""') + '"'
    return value


_STAGE_FUNCS = {
    "ingest": stage_ingest,
    "salience": stage_salience,
    "enhance": stage_enhance,
    "label": stage_label,
    "split": stage_split,
    "train-lda": stage_train_lda,
    "theta": stage_theta,
    "eval": stage_eval,
    "report": stage_report,
}


def run_stage(stage: str, cfg: PipelineConfig) -> dict:
    """Run one pipeline stage; artifacts land under cfg.output_dir."""
    if stage not in _STAGE_FUNCS:
        raise UsageError(f"unknown stage {stage!r}; choose from {', '.join(STAGES)}")
    return _STAGE_FUNCS[stage](cfg)


def run_all(cfg: PipelineConfig) -> dict:
    """Run every stage in order; returns per-stage summaries."""
    return {stage: run_stage(stage, cfg) for stage in STAGES}
