"""Metrics computed from run logs.

Everything here is derived from logged records, never from live run
state: learning deltas, transferability across terrain switches,
parent-offspring controller and morphology similarity, morphological
descriptors with PCA, and correlation statistics. Similarities that
require a normalizing maximum (morphological distance) use the maximum
observed in the analyzed dataset, so they are relative to the invocation.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .morphology import HINGE, ModuleTree, develop_body

DESCRIPTOR_NAMES = (
    "branching",
    "limbs",
    "length_of_limbs",
    "coverage",
    "joints_ratio",
    "proportion",
    "symmetry",
    "size",
)

MAX_MODULES_NORM = 10


def learning_delta(before: float, after: float) -> float:
    """Fitness gained during a lifetime of learning."""
    return after - before


def transferability(old_values, new_values) -> float | None:
    """Mean fitness on a new terrain over mean fitness on the old one.

    Undefined (None) when the old mean is not positive, since the ratio
    then loses its meaning.
    """
    old_mean = float(np.mean(old_values))
    if old_mean <= 0.0:
        return None
    return float(np.mean(new_values)) / old_mean


def controller_similarity(a, b) -> float:
    """Cosine similarity of two flattened brain genotype matrices."""
    va = np.asarray(a, dtype=float).ravel()
    vb = np.asarray(b, dtype=float).ravel()
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        warnings.warn("cosine similarity of a zero vector is reported as 0",
                      RuntimeWarning, stacklevel=2)
        return 0.0
    return float(va @ vb / (na * nb))


# ---------------------------------------------------------------------------
# Morphological descriptors


def descriptor_vector(tree: ModuleTree) -> np.ndarray:
    """Eight descriptors in [0, 1] summarizing a module tree.

    branching       modules with >= 3 children over the most a tree of
                    this size could hold, floor((m - 1) / 3)
    limbs           leaf modules over the most a tree of this size could
                    hold given socket capacities (core 4, brick 3)
    length_of_limbs deepest module over (m - 1)
    coverage        modules over the volume of their 3D bounding box
    joints_ratio    hinges over (m - 1)
    proportion      short side over long side of the 2D bounding box
    symmetry        best mirror-match ratio of 2D occupancy, x or y axis
    size            modules over the module budget (10)
    """
    m = len(tree)
    children_counts = np.zeros(m, dtype=int)
    for mod in tree.modules[1:]:
        children_counts[mod.parent] += 1

    b = int(np.sum(children_counts >= 3))
    b_max = (m - 1) // 3
    branching = b / b_max if b_max else 0.0

    leaves = sum(1 for mod in tree.modules[1:] if children_counts[mod.index] == 0)
    if m >= 2:
        internal_min = 1 if m <= 5 else 1 + math.ceil((m - 5) / 3)
        l_max = m - internal_min
    else:
        l_max = 0
    limbs = leaves / l_max if l_max else 0.0

    depth = max(mod.depth for mod in tree.modules)
    length_of_limbs = depth / (m - 1) if m > 1 else 0.0

    coords = np.array([mod.position for mod in tree.modules])
    extents = coords.max(axis=0) - coords.min(axis=0) + 1
    coverage = m / float(np.prod(extents))

    hinges = sum(1 for mod in tree.modules if mod.kind == HINGE)
    joints_ratio = hinges / (m - 1) if m > 1 else 0.0

    width, depth2 = int(extents[0]), int(extents[1])
    proportion = min(width, depth2) / max(width, depth2)

    cells = {tree.grid2(mod.index) for mod in tree.modules}
    mirror_x = {(-x, y) for x, y in cells}
    mirror_y = {(x, -y) for x, y in cells}
    symmetry = max(len(cells & mirror_x), len(cells & mirror_y)) / len(cells)

    size = m / MAX_MODULES_NORM

    return np.array([branching, limbs, length_of_limbs, coverage,
                     joints_ratio, proportion, symmetry, size])


def descriptor_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


def similarity_from_distance(distance: float, max_distance: float) -> float:
    """(max - d) / max; when the dataset maximum is 0 everything is 1."""
    if max_distance <= 0.0:
        return 1.0
    return (max_distance - distance) / max_distance


# ---------------------------------------------------------------------------
# Ordered tree edit distance (Zhang-Shasha, unit costs)


class _PostorderTree:
    def __init__(self, nested):
        self.labels = []
        self.lml = []

        def walk(node):
            kind, rotation, children = node
            first_leaf = None
            for child in children:
                ci = walk(child)
                if first_leaf is None:
                    first_leaf = self.lml[ci]
            idx = len(self.labels)
            self.labels.append((kind, rotation))
            self.lml.append(first_leaf if first_leaf is not None else idx)
            return idx

        walk(nested)
        last_with_lml = {}
        for i, l in enumerate(self.lml):
            last_with_lml[l] = i
        self.keyroots = sorted(last_with_lml.values())


def tree_edit_distance(a, b) -> int:
    """Exact edit distance between nested-list trees [kind, rot, children].

    Unit costs for insert, delete and relabel; children are compared in
    order. Labels are (kind, rotation) pairs.
    """
    A, B = _PostorderTree(a), _PostorderTree(b)
    na, nb = len(A.labels), len(B.labels)
    TD = [[0] * nb for _ in range(na)]
    for i in A.keyroots:
        for j in B.keyroots:
            _treedist(A, B, i, j, TD)
    return TD[na - 1][nb - 1]


def _treedist(A, B, i, j, TD):
    li, lj = A.lml[i], B.lml[j]
    m = i - li + 2
    n = j - lj + 2
    fd = [[0] * n for _ in range(m)]
    for x in range(1, m):
        fd[x][0] = fd[x - 1][0] + 1
    for y in range(1, n):
        fd[0][y] = fd[0][y - 1] + 1
    for x in range(1, m):
        ai = li + x - 1
        for y in range(1, n):
            bj = lj + y - 1
            if A.lml[ai] == li and B.lml[bj] == lj:
                cost = 0 if A.labels[ai] == B.labels[bj] else 1
                fd[x][y] = min(fd[x - 1][y] + 1,
                               fd[x][y - 1] + 1,
                               fd[x - 1][y - 1] + cost)
                TD[ai][bj] = fd[x][y]
            else:
                p = A.lml[ai] - li
                q = B.lml[bj] - lj
                fd[x][y] = min(fd[x - 1][y] + 1,
                               fd[x][y - 1] + 1,
                               fd[p][q] + TD[ai][bj])


# ---------------------------------------------------------------------------
# Statistics


def pearson(xs, ys) -> tuple | None:
    """Pearson r with p-value; None when undefined (n < 3 or a constant
    input)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 3 or len(xs) != len(ys):
        return None
    if np.std(xs) == 0.0 or np.std(ys) == 0.0:
        return None
    r, p = stats.pearsonr(xs, ys)
    return float(r), float(p), len(xs)


def ci95(values) -> tuple:
    """(mean, lower, upper) of the t-based 95 percent confidence interval."""
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    n = len(values)
    if n < 2:
        return mean, mean, mean
    half = float(stats.t.ppf(0.975, n - 1) * stats.sem(values))
    return mean, mean - half, mean + half


@dataclass
class PcaResult:
    scores: np.ndarray
    loadings: np.ndarray
    explained_ratio: np.ndarray
    mean: np.ndarray
    scale: np.ndarray


def pca(X: np.ndarray) -> PcaResult:
    """PCA of standardized columns (zero mean, unit sample variance).

    Columns with zero variance are left centred but unscaled. Loadings
    are returned per component (rows), orthonormal; scores @ loadings
    reconstructs the standardized data.
    """
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    scale = X.std(axis=0, ddof=1) if len(X) > 1 else np.ones(X.shape[1])
    scale = np.where(scale == 0.0, 1.0, scale)
    Z = (X - mean) / scale
    U, S, Vt = np.linalg.svd(Z, full_matrices=False)
    scores = U * S
    var = S**2
    total = var.sum()
    explained = var / total if total > 0 else np.zeros_like(var)
    return PcaResult(scores, Vt, explained, mean, scale)


# ---------------------------------------------------------------------------
# Log-level aggregation


@dataclass
class RunData:
    """One run's parsed log plus its identifying configuration."""

    setup: str
    mode: str
    seed: int
    log: object


def _tree_from_genotype(record) -> ModuleTree:
    from .genotype import BodyGenotype

    return develop_body(BodyGenotype.from_obj(record["genotype"]["body"]))


def analyze_runs(runs: list) -> dict:
    """Compute every metric table from a list of RunData.

    Returns a dict of table name -> (column names, rows). Values that a
    metric leaves undefined are empty strings in the rows.
    """
    individuals = []
    for run in runs:
        recs = run.log.individuals
        for rec in sorted(recs.values(), key=lambda r: r["id"]):
            brain = np.array(rec["genotype"]["brain"], dtype=float)
            tree = _tree_from_genotype(rec)
            desc = descriptor_vector(tree)
            row = {
                "run": run,
                "rec": rec,
                "tree_nested": rec["tree"],
                "brain": brain,
                "descriptors": desc,
                "delta": learning_delta(rec["fitness_before"], rec["fitness_after"]),
                "ctrl_sim": 0.0,
                "desc_dist": None,
                "tree_dist": None,
            }
            if rec["parents"]:
                parent = recs.get(rec["parents"][0])
                if parent is not None:
                    pbrain = np.array(parent["genotype"]["brain"], dtype=float)
                    row["ctrl_sim"] = controller_similarity(brain, pbrain)
                    pdesc = descriptor_vector(_tree_from_genotype(parent))
                    row["desc_dist"] = descriptor_distance(desc, pdesc)
                    row["tree_dist"] = tree_edit_distance(rec["tree"], parent["tree"])
            individuals.append(row)

    max_desc = max((r["desc_dist"] for r in individuals if r["desc_dist"] is not None),
                   default=0.0)
    max_tree = max((r["tree_dist"] for r in individuals if r["tree_dist"] is not None),
                   default=0)
    for r in individuals:
        r["desc_sim"] = ("" if r["desc_dist"] is None
                         else similarity_from_distance(r["desc_dist"], max_desc))
        r["tree_sim"] = ("" if r["tree_dist"] is None
                         else similarity_from_distance(r["tree_dist"], float(max_tree)))

    tables = {}
    tables["individuals"] = _individuals_table(individuals)
    tables["series"] = _series_table(runs, individuals)
    tables["summary"] = _summary_table(tables["series"])
    tables["transferability"] = _transfer_table(runs)
    tables["correlations"] = _correlation_table(individuals)
    tables["pca_scores"], tables["pca_loadings"] = _pca_tables(individuals)
    return tables


def _key(run: RunData) -> tuple:
    return (run.setup, run.mode, run.seed)


def _individuals_table(individuals) -> tuple:
    cols = ("setup", "mode", "seed", "generation", "id", "terrain",
            "fitness_before", "fitness_after", "learning_delta",
            "controller_similarity", "desc_similarity", "tree_similarity",
            *DESCRIPTOR_NAMES)
    rows = []
    for r in individuals:
        rec = r["rec"]
        rows.append((*_key(r["run"]), rec["generation"], rec["id"], rec["terrain"],
                     rec["fitness_before"], rec["fitness_after"], r["delta"],
                     r["ctrl_sim"], r["desc_sim"], r["tree_sim"],
                     *r["descriptors"]))
    return cols, rows


def _series_table(runs, individuals) -> tuple:
    cols = ("setup", "mode", "seed", "generation", "metric", "value")
    rows = []
    for run in runs:
        for pop in run.log.populations:
            fits = pop["fitness"]
            rows.append((*_key(run), pop["generation"], "fitness_mean",
                         float(np.mean(fits))))
            rows.append((*_key(run), pop["generation"], "fitness_max",
                         float(np.max(fits))))
    by_gen: dict = {}
    for r in individuals:
        key = (_key(r["run"]), r["rec"]["generation"])
        by_gen.setdefault(key, []).append(r)
    for (rkey, gen), rows_g in sorted(by_gen.items()):
        rows.append((*rkey, gen, "learning_delta_mean",
                     float(np.mean([r["delta"] for r in rows_g]))))
        rows.append((*rkey, gen, "controller_similarity_mean",
                     float(np.mean([r["ctrl_sim"] for r in rows_g]))))
        desc_sims = [r["desc_sim"] for r in rows_g if r["desc_sim"] != ""]
        if desc_sims:
            rows.append((*rkey, gen, "morph_similarity_desc_mean",
                         float(np.mean(desc_sims))))
        tree_sims = [r["tree_sim"] for r in rows_g if r["tree_sim"] != ""]
        if tree_sims:
            rows.append((*rkey, gen, "morph_similarity_tree_mean",
                         float(np.mean(tree_sims))))
    return cols, rows


def _summary_table(series) -> tuple:
    _, rows = series
    cols = ("setup", "mode", "generation", "metric", "mean", "ci_low", "ci_high", "runs")
    grouped: dict = {}
    for setup, mode, seed, gen, metric, value in rows:
        grouped.setdefault((setup, mode, gen, metric), []).append(value)
    out = []
    for (setup, mode, gen, metric), values in sorted(grouped.items()):
        mean, lo, hi = ci95(values)
        out.append((setup, mode, gen, metric, mean, lo, hi, len(values)))
    return cols, out


def _transfer_table(runs) -> tuple:
    cols = ("setup", "mode", "seed", "generation", "old_terrain", "new_terrain",
            "transferability")
    rows = []
    for run in runs:
        for change in run.log.env_changes:
            olds = [s["old"] for s in change["survivors"]]
            news = [s["new"] for s in change["survivors"]]
            ratio = transferability(olds, news)
            rows.append((*_key(run), change["generation"], change["old_terrain"],
                         change["new_terrain"], "" if ratio is None else ratio))
    return cols, rows


def _correlation_table(individuals) -> tuple:
    cols = ("setup", "mode", "x", "y", "r", "p", "n")
    grouped: dict = {}
    for r in individuals:
        if not r["rec"]["parents"]:
            continue
        grouped.setdefault((r["run"].setup, r["run"].mode), []).append(r)
    rows = []
    pairs = (("controller_similarity", "ctrl_sim"),
             ("desc_similarity", "desc_sim"),
             ("tree_similarity", "tree_sim"))
    for (setup, mode), rows_g in sorted(grouped.items()):
        for label, field_name in pairs:
            xs = [r[field_name] for r in rows_g if r[field_name] != ""]
            ys = [r["rec"]["fitness_after"] for r in rows_g if r[field_name] != ""]
            result = pearson(xs, ys)
            if result is None:
                rows.append((setup, mode, label, "fitness_after", "", "", len(xs)))
            else:
                rows.append((setup, mode, label, "fitness_after", *result))
    return cols, rows


def _pca_tables(individuals) -> tuple:
    score_cols = ("setup", "mode", "seed", "id", "pc1", "pc2")
    load_cols = ("component", "explained_ratio", *DESCRIPTOR_NAMES)
    if len(individuals) < 2:
        return (score_cols, []), (load_cols, [])
    X = np.array([r["descriptors"] for r in individuals])
    result = pca(X)
    scores = []
    for r, sc in zip(individuals, result.scores):
        pc2 = float(sc[1]) if sc.shape[0] > 1 else 0.0
        scores.append((*_key(r["run"]), r["rec"]["id"], float(sc[0]), pc2))
    loads = []
    for c in range(result.loadings.shape[0]):
        loads.append((c + 1, float(result.explained_ratio[c]),
                      *[float(v) for v in result.loadings[c]]))
    return (score_cols, scores), (load_cols, loads)
