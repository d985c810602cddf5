"""End-to-end run: filtered log -> graphs -> communities -> features -> prediction -> phenotypes."""

from __future__ import annotations

import csv
import dataclasses
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from . import plots
from .community import CommunityPartition, louvain
from .features import GroupContext, InfluenceVector, build_user_dataset, influence_vector
from .graphs import AUTO, build_homophily_graph, build_physical_graph, build_social_graph, user_centroids
from .ingest import FilterPolicy, apply_filters, load_event_log, write_event_log
from .learn import (KINDS, LINEAR_SVM, SCENARIOS, Metrics, SVMParams, TreeParams,
                    cross_validate, mutual_info_select, scenario_columns)
from .phenotype import (assign_fingers, assign_influence_classes, baseline_single_class_cv,
                        behavioral_classes, default_radial_cutoff, group_by, per_class_cv,
                        spherical_of, write_assignments)

log = logging.getLogger(__name__)

STAGES = ("ingest", "graphs", "communities", "features", "predict", "phenotypes", "report")


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage


_PATH_KEYS = ("input_dir", "events", "attendance", "subscriptions", "out")


@dataclass
class PipelineConfig:
    input_dir: str = ""
    events: str = ""
    attendance: str = ""
    subscriptions: str = ""
    out: str = "out"
    seed: int = 0
    min_events_per_user: int = 20
    min_participants_per_event: int = 20
    require_subscription: bool = True
    bounding_box: str = ""                 # "lat_min,lat_max,lon_min,lon_max" or empty
    mad_threshold: float = 3.0
    sigma_km: str = AUTO                   # "auto" or a number
    epsilon: float = 1e-4
    louvain_tolerance: float = 1e-7
    classifier: str = LINEAR_SVM
    compare_classifiers: bool = True
    svm_lambda: float = 1e-3
    svm_epochs: int = 200
    tree_max_depth: int = 6
    tree_min_leaf: int = 5
    cv_k: int = 10
    mi_bins: int = 10
    finger_k: int = 5
    radial_cutoff: str = AUTO              # "auto" (5th percentile of r) or a number
    svg_timestamp: bool = False

    def paths(self):
        if self.input_dir:
            d = Path(self.input_dir)
            return (Path(self.events or d / "events.csv"), Path(self.attendance or d / "attendance.csv"),
                    Path(self.subscriptions or d / "subscriptions.csv"))
        if not (self.events and self.attendance and self.subscriptions):
            raise ConfigError("set input_dir or all of events, attendance, subscriptions")
        return Path(self.events), Path(self.attendance), Path(self.subscriptions)

    def validate(self):
        for p in self.paths():
            if not p.is_file():
                raise ConfigError(f"input file not found: {p}")
        if self.classifier not in KINDS:
            raise ConfigError(f"classifier must be one of {KINDS}")
        if self.cv_k < 2:
            raise ConfigError("cv_k must be >= 2")
        self.filter_policy()
        self.sigma()
        self.cutoff()

    def filter_policy(self) -> FilterPolicy:
        box = None
        if self.bounding_box:
            try:
                box = tuple(float(x) for x in self.bounding_box.split(","))
            except ValueError:
                raise ConfigError(f"bad bounding_box {self.bounding_box!r}") from None
            if len(box) != 4:
                raise ConfigError("bounding_box needs four numbers")
        try:
            return FilterPolicy(self.min_events_per_user, self.min_participants_per_event,
                                self.require_subscription, box)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def sigma(self):
        return _auto_or_float(self.sigma_km, "sigma_km")

    def cutoff(self):
        return _auto_or_float(self.radial_cutoff, "radial_cutoff")

    def classifier_params(self, kind):
        if kind == LINEAR_SVM:
            return SVMParams(self.svm_lambda, self.svm_epochs)
        return TreeParams(self.tree_max_depth, self.tree_min_leaf)

    # -- plain-text key = value files

    @classmethod
    def from_file(cls, path, overrides: Optional[Dict[str, str]] = None) -> "PipelineConfig":
        values = {}
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        for n, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{p}:{n}: expected 'key = value'")
            k, v = (s.strip() for s in line.split("=", 1))
            if k in _PATH_KEYS and v and not Path(v).is_absolute():
                # paths in a file are relative to that file, so a manifest works from anywhere
                v = str(p.parent / v)
            values[k] = v
        values.update(overrides or {})
        return cls.from_strings(values)

    @classmethod
    def from_strings(cls, values: Dict[str, str]) -> "PipelineConfig":
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for k, v in values.items():
            if k not in fields:
                raise ConfigError(f"unknown config key {k!r}")
            kwargs[k] = _coerce(fields[k].type, v, k)
        return cls(**kwargs)

    def to_text(self) -> str:
        lines = ["# run manifest; reusable as --config"]
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


def _coerce(type_name, value, key):
    t = type_name if isinstance(type_name, str) else type_name.__name__
    try:
        if t == "bool":
            if isinstance(value, bool):
                return value
            low = str(value).lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return low in ("true", "1", "yes")
        if t == "int":
            return int(value)
        if t == "float":
            return float(value)
        return str(value)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def _auto_or_float(value, name):
    if str(value).lower() == AUTO:
        return None
    try:
        x = float(value)
    except ValueError:
        raise ConfigError(f"{name} must be 'auto' or a number, got {value!r}") from None
    return x


# ---------------------------------------------------------------- writers

def _write_rows(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(x):
    return repr(float(x))


def _metric_row(m: Metrics):
    return [_fmt(m.accuracy), _fmt(m.precision), _fmt(m.recall)]


# ---------------------------------------------------------------- stages

@dataclass
class RunState:
    config: PipelineConfig
    out: Path
    log: object = None
    graphs: Dict[str, object] = field(default_factory=dict)
    partitions: Dict[str, CommunityPartition] = field(default_factory=dict)
    context: Optional[GroupContext] = None
    centroids: Dict = field(default_factory=dict)
    datasets: Dict = field(default_factory=dict)
    influence: List[InfluenceVector] = field(default_factory=list)
    assignments: List = field(default_factory=list)


def stage_ingest(st: RunState):
    raw = load_event_log(*st.config.paths())
    st.log = apply_filters(raw, st.config.filter_policy())
    log.info("filtered log: %d users, %d events (from %d, %d)",
             len(st.log.users), len(st.log.events), len(raw.users), len(raw.events))
    write_event_log(st.log, st.out / "filtered")


def stage_graphs(st: RunState):
    c = st.config
    st.centroids = user_centroids(st.log, c.mad_threshold)
    sigma = c.sigma()
    st.graphs = {
        "sg": build_social_graph(st.log),
        "pg": build_physical_graph(st.log, AUTO if sigma is None else sigma, c.epsilon, st.centroids),
        "hg": build_homophily_graph(st.log),
    }
    for name, g in st.graphs.items():
        (st.out / "graphs").mkdir(parents=True, exist_ok=True)
        g.to_csv(st.out / "graphs" / f"{name}_edges.csv")
    _write_rows(st.out / "graphs" / "centroids.csv", ["user_id", "latitude", "longitude"],
                [[u, _fmt(p.latitude), _fmt(p.longitude)] for u, p in sorted(st.centroids.items())])


def stage_communities(st: RunState):
    c = st.config
    rows = []
    for graph_name, part_name in (("sg", "sc"), ("pg", "pc"), ("hg", "hc")):
        p = louvain(st.graphs[graph_name], seed=c.seed, tolerance=c.louvain_tolerance)
        st.partitions[part_name] = p
        (st.out / "communities").mkdir(parents=True, exist_ok=True)
        p.to_csv(st.out / "communities" / f"{part_name}_partition.csv")
        rows.append([graph_name, p.n_communities, _fmt(p.modularity)])
    _write_rows(st.out / "communities" / "modularity.csv", ["graph", "n_communities", "modularity"], rows)
    st.context = GroupContext.from_partitions(st.graphs["sg"], st.partitions["sc"],
                                              st.partitions["pc"], st.partitions["hc"])


def stage_features(st: RunState):
    users = sorted(st.log.users)
    ds_dir = st.out / "features" / "datasets"
    ds_dir.mkdir(parents=True, exist_ok=True)
    short = 0
    for u in users:
        d = build_user_dataset(u, st.context, st.log, st.centroids[u])
        short += d.shortfall
        st.datasets[u] = d
        d.to_csv(ds_dir / f"{u}.csv")
    if short:
        log.warning("%d user dataset(s) short of negative events", short)
    st.influence = [influence_vector(u, st.context, st.log) for u in users]
    _write_rows(st.out / "features" / "influence.csv", ["user_id", "i_ego", "i_sc", "i_pc", "i_hc"],
                [[v.user_id, _fmt(v.i_ego), _fmt(v.i_sc), _fmt(v.i_pc), _fmt(v.i_hc)] for v in st.influence])


def _user_k(dataset, k):
    n_pos = int(dataset.y.sum())
    minority = min(n_pos, len(dataset.rows) - n_pos)
    return min(k, minority)


def stage_predict(st: RunState):
    c = st.config
    metric_rows, selection_rows = [], []
    per_scenario: Dict[str, List[Metrics]] = {s: [] for s in SCENARIOS}
    per_kind: Dict[str, List[Metrics]] = {k: [] for k in KINDS}
    kinds = KINDS if c.compare_classifiers else (c.classifier,)
    skipped = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for u in sorted(st.datasets):
            d = st.datasets[u]
            k = _user_k(d, c.cv_k)
            if k < 2:
                skipped += 1
                continue
            sel = mutual_info_select(d, c.mi_bins)
            selection_rows.append([u, sel.feature, *(_fmt(sel.scores[f]) for f in ("ego", "SC", "PC", "HC")),
                                   int(sel.low_confidence)])
            for scenario in SCENARIOS:
                cols = scenario_columns(scenario, sel)
                m = cross_validate(c.classifier, d, k, c.seed, cols, c.classifier_params(c.classifier))
                per_scenario[scenario].append(m)
                metric_rows.append([u, scenario, *_metric_row(m)])
                if scenario == "all_features":
                    per_kind[c.classifier].append(m)
            for kind in kinds:
                if kind != c.classifier:
                    per_kind[kind].append(cross_validate(kind, d, k, c.seed, (0, 1, 2, 3),
                                                         c.classifier_params(kind)))
    if skipped:
        log.warning("%d user(s) skipped in prediction: fewer than 2 rows in a class", skipped)
    out = st.out / "predict"
    _write_rows(out / "metrics.csv", ["user_id", "scenario", "accuracy", "precision", "recall"], metric_rows)
    _write_rows(out / "feature_selection.csv",
                ["user_id", "feature", "mi_ego", "mi_sc", "mi_pc", "mi_hc", "low_confidence"], selection_rows)
    _write_rows(out / "scenario_summary.csv", ["scenario", "n_users", "accuracy", "precision", "recall"],
                [[s, len(v), *_metric_row(Metrics.mean(v))] for s, v in per_scenario.items() if v])
    _write_rows(out / "classifier_comparison.csv", ["classifier", "n_users", "accuracy", "precision", "recall"],
                [[k, len(v), *_metric_row(Metrics.mean(v))] for k, v in per_kind.items() if v])


def stage_phenotypes(st: RunState):
    c = st.config
    users = [v.user_id for v in st.influence]
    cutoff = c.cutoff()
    if cutoff is None:
        cutoff = default_radial_cutoff(st.influence)
    fingers = assign_fingers(st.influence, c.finger_k, cutoff, c.seed)
    classes = assign_influence_classes(st.influence, c.seed)
    st.assignments = behavioral_classes(users, fingers, classes)
    spherical = {v.user_id: spherical_of(v) for v in st.influence}
    out = st.out / "phenotypes"
    out.mkdir(parents=True, exist_ok=True)
    write_assignments(out / "assignments.csv", st.assignments, spherical)

    params = c.classifier_params(c.classifier)
    eligible = {u: d for u, d in st.datasets.items() if d.rows}
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        base = baseline_single_class_cv(sorted(eligible), eligible, c.cv_k, c.seed, c.classifier, params)
        rows.append(["baseline", "all", len(eligible), *_metric_row(base)])
        for partition, key in (("influence_class", "influence_class"), ("finger", "finger"),
                               ("behavioral_class", "behavioral_class")):
            groups = group_by(st.assignments, key)
            results = per_class_cv(groups, eligible, c.cv_k, c.seed, c.classifier, params)
            for cls, m in results.items():
                label = f"{cls[0]}:{cls[1]}" if isinstance(cls, tuple) else str(cls)
                rows.append([partition, label, len(groups[cls]), *_metric_row(m)])
            if results:
                rows.append([partition, "average", sum(len(groups[k]) for k in results),
                             *_metric_row(Metrics.mean(list(results.values())))])
    _write_rows(out / "class_metrics.csv",
                ["partition", "class", "n_users", "accuracy", "precision", "recall"], rows)


def stage_report(st: RunState):
    out = st.out / "report"
    out.mkdir(parents=True, exist_ok=True)
    plots.write_report_figures(out, st.influence, st.assignments, timestamp=st.config.svg_timestamp)


_RUNNERS = {
    "ingest": stage_ingest, "graphs": stage_graphs, "communities": stage_communities,
    "features": stage_features, "predict": stage_predict, "phenotypes": stage_phenotypes,
    "report": stage_report,
}


def run_pipeline(config: PipelineConfig, stop_after: str = "report") -> RunState:
    """Run every stage up to and including `stop_after`; raises StageError naming the failed stage."""
    if stop_after not in STAGES:
        raise ConfigError(f"unknown stage {stop_after!r}; choose from {', '.join(STAGES)}")
    config.validate()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    # absolute paths keep the manifest valid from inside the output directory
    manifest = dataclasses.replace(config, **{k: str(Path(getattr(config, k)).resolve())
                                              for k in _PATH_KEYS if getattr(config, k)})
    (out / "manifest.cfg").write_text(manifest.to_text(), encoding="utf-8")
    st = RunState(config, out)
    for name in STAGES[: STAGES.index(stop_after) + 1]:
        log.info("stage %s", name)
        try:
            _RUNNERS[name](st)
        except Exception as exc:
            raise StageError(name, exc) from exc
    return st
