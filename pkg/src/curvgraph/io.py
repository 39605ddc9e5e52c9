"""Dataset ingestion and result emission.

Formats
-------
edge list
    ``u v`` per line, whitespace separated, ``#`` starts a comment. A
    ``# nodes=N`` comment fixes the node count (isolated trailing nodes).
features
    CSV, one row per node, optional non-numeric header row.
labels
    one integer per line.
GML subset
    ``graph [ node [ id N label "S" value V ] edge [ source A target B ] ]``.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import Graph, build_graph


@dataclass(frozen=True, eq=False)
class SplitMasks:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        t, v, s = (np.asarray(m, dtype=bool) for m in (self.train, self.val, self.test))
        if not t.shape == v.shape == s.shape:
            raise ValueError("split masks differ in length")
        object.__setattr__(self, "train", t)
        object.__setattr__(self, "val", v)
        object.__setattr__(self, "test", s)

    def disjoint(self) -> bool:
        return not ((self.train & self.val).any() or (self.train & self.test).any()
                    or (self.val & self.test).any())


@dataclass(frozen=True, eq=False)
class DatasetBundle:
    graph: Graph
    features: np.ndarray
    labels: np.ndarray
    splits: SplitMasks
    name: str = "dataset"
    node_names: list[str] | None = field(default=None)

    def __post_init__(self):
        n = self.graph.num_nodes
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2 or features.shape[0] != n:
            raise ValueError(f"features have shape {features.shape}, expected ({n}, F)")
        if not np.isfinite(features).all():
            raise ValueError("features contain non-finite entries")
        if labels.shape != (n,):
            raise ValueError(f"labels have shape {labels.shape}, expected ({n},)")
        if self.splits.train.shape != (n,):
            raise ValueError("split masks do not match node count")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0


class GMLParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


# --- edge lists -------------------------------------------------------------

def read_edgelist(path, return_ids: bool = False):
    """Read an undirected edge list.

    Non-negative integer ids are used as they are; a file with no integer
    tokens at all is remapped to ``0..N-1`` in order of first appearance,
    and a mix of the two is rejected. Edges given in both directions
    collapse to one.

    Returns the :class:`Graph`, plus (with ``return_ids``) the original
    token of every dense node id.

    Raises
    ------
    ValueError
        Naming the line of the first malformed entry.
    """
    pairs = []
    num_nodes = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if line.startswith("#"):
                m = re.search(r"nodes=(\d+)", line)
                if m:
                    num_nodes = int(m.group(1))
                continue
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.split()
            if len(toks) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'u v', got {raw.rstrip()!r}")
            pairs.append((lineno, toks[0], toks[1]))
    tokens = [t for _, a, b in pairs for t in (a, b)]
    if all(t.isdigit() for t in tokens):
        edges = [(int(a), int(b)) for _, a, b in pairs]
        n = max([num_nodes or 0] + [max(e) + 1 for e in edges])
        ids = [str(i) for i in range(n)]
    else:
        numeric = any(t.isdigit() for t in tokens)
        if numeric:
            # mixed tokens: report the first line that is not a clean integer pair
            for lineno, a, b in pairs:
                if not (a.isdigit() and b.isdigit()):
                    raise ValueError(f"{path}:{lineno}: node ids must be non-negative integers")
        index = {}
        for t in tokens:
            index.setdefault(t, len(index))
        edges = [(index[a], index[b]) for _, a, b in pairs]
        n = max(len(index), num_nodes or 0)
        ids = list(index)
    g = build_graph(np.array(edges, dtype=np.int64).reshape(-1, 2), n)
    return (g, ids) if return_ids else g


def write_edgelist(path, g: Graph) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# nodes={g.num_nodes} edges={g.edge_count}\n")
        for i, j in g.edges():
            fh.write(f"{i} {j}\n")


# --- features and labels ----------------------------------------------------

def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def read_features(path) -> np.ndarray:
    """CSV feature matrix; a first row that is not numeric is taken as header."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows and not all(_is_number(t) for t in rows[0]):
        rows = rows[1:]
    if not rows:
        return np.zeros((0, 0))
    width = len(rows[0])
    for k, r in enumerate(rows, 1):
        if len(r) != width:
            raise ValueError(f"{path}: row {k} has {len(r)} columns, expected {width}")
    return np.array(rows, dtype=np.float64)


def write_features(path, features: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        for row in np.asarray(features, dtype=np.float64):
            w.writerow([f"{x:.17g}" for x in row])


def read_labels(path) -> np.ndarray:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                out.append(int(line))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: label {line!r} is not an integer") from None
    return np.array(out, dtype=np.int64)


def write_labels(path, labels) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(f"{int(c)}\n" for c in labels)


def write_splits(path, splits: SplitMasks) -> None:
    """One line per node: ``train``, ``val``, ``test`` or ``-``."""
    with open(path, "w", encoding="utf-8") as fh:
        for t, v, s in zip(splits.train, splits.val, splits.test):
            tags = [name for name, on in (("train", t), ("val", v), ("test", s)) if on]
            fh.write((",".join(tags) or "-") + "\n")


def read_splits(path) -> SplitMasks:
    train, val, test = [], [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            tags = set(line.strip().split(","))
            train.append("train" in tags)
            val.append("val" in tags)
            test.append("test" in tags)
    return SplitMasks(np.array(train), np.array(val), np.array(test))


def write_bundle(directory, bundle: DatasetBundle) -> Path:
    """Write ``edges.txt``, ``features.csv``, ``labels.txt``, ``splits.txt``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_edgelist(d / "edges.txt", bundle.graph)
    write_features(d / "features.csv", bundle.features)
    write_labels(d / "labels.txt", bundle.labels)
    write_splits(d / "splits.txt", bundle.splits)
    return d


def read_bundle(directory, name: str | None = None) -> DatasetBundle:
    d = Path(directory)
    labels = read_labels(d / "labels.txt")
    g = read_edgelist(d / "edges.txt")
    if g.num_nodes < labels.shape[0]:
        g = build_graph(g.edges(), labels.shape[0])
    return DatasetBundle(
        g, read_features(d / "features.csv"), labels, read_splits(d / "splits.txt"),
        name=name or d.name,
    )


# --- GML subset -------------------------------------------------------------

_TOKEN = re.compile(
    rb'\s*(?:(?P<open>\[)|(?P<close>\])|"(?P<str>[^"]*)"|(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)'
    rb'|(?P<key>[A-Za-z_][A-Za-z0-9_]*))'
)


def _tokenize(data: bytes):
    pos = 0
    n = len(data)
    while True:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= n:
            return
        if data[pos:pos + 1] == b"#":  # comment to end of line
            nl = data.find(b"\n", pos)
            pos = n if nl < 0 else nl + 1
            continue
        m = _TOKEN.match(data, pos)
        if m is None or m.end() == pos:
            raise GMLParseError(f"unexpected character {data[pos:pos + 1]!r}", pos)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        if kind == "str":
            value = m.group("str").decode("utf-8", errors="replace")
        elif kind == "num":
            txt = m.group("num").decode()
            value = float(txt) if any(c in txt for c in ".eE") else int(txt)
        elif kind == "key":
            value = m.group("key").decode()
        else:
            value = None
        yield kind, value, start
        pos = m.end()


def _parse_list(tokens):
    """Parse ``key value`` pairs into nested lists, tracking ``[`` / ``]``."""
    root = []
    stack = [(root, None)]  # (items, offset of the '[' that opened them)
    tokens = iter(tokens)
    for kind, value, offset in tokens:
        items = stack[-1][0]
        if kind == "close":
            if len(stack) == 1:
                raise GMLParseError("unbalanced ']'", offset)
            stack.pop()
            continue
        if kind != "key":
            raise GMLParseError(f"expected a key, got {value!r}", offset)
        try:
            vkind, vvalue, voffset = next(tokens)
        except StopIteration:
            raise GMLParseError(f"key {value!r} has no value", offset) from None
        if vkind == "open":
            child = []
            items.append((value, child, offset))
            stack.append((child, voffset))
        elif vkind in ("str", "num"):
            items.append((value, vvalue, offset))
        else:
            raise GMLParseError(f"bad value for key {value!r}", voffset)
    if len(stack) > 1:
        raise GMLParseError("unbalanced '['", stack[-1][1])
    return root


def parse_gml(data: bytes | str):
    """Parse GML text into nested ``(key, value, byte offset)`` lists."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    return _parse_list(_tokenize(data))


def _field(block, key, offset, required=True):
    for k, v, _ in block:
        if k == key:
            return v
    if required:
        raise GMLParseError(f"missing '{key}'", offset)
    return None


def read_gml_subset(path_or_text) -> tuple[Graph, list[str], np.ndarray]:
    """Read the node/edge subset of GML.

    Returns the graph (node ids remapped to order of appearance), a label
    per node (``str(id)`` when absent) and the integer ``value`` per node
    (``-1`` when absent). Keys other than id/label/value/source/target are
    ignored.

    Raises
    ------
    GMLParseError
        On unbalanced brackets, a missing id/source/target, or ids that do
        not refer to declared nodes; the error carries the byte offset.
    """
    if isinstance(path_or_text, bytes):
        data = path_or_text
    elif isinstance(path_or_text, str) and "[" in path_or_text:
        data = path_or_text.encode("utf-8")  # inline GML text, never a path
    else:
        data = Path(path_or_text).read_bytes()
    top = parse_gml(data)
    graphs = [(v, off) for k, v, off in top if k == "graph" and isinstance(v, list)]
    if not graphs:
        raise GMLParseError("no 'graph [ ... ]' block", 0)
    body, _ = graphs[0]
    index, labels, values = {}, [], []
    raw_edges = []
    for key, block, offset in body:
        if key == "node" and isinstance(block, list):
            nid = _field(block, "id", offset)
            if nid in index:
                raise GMLParseError(f"duplicate node id {nid}", offset)
            index[nid] = len(index)
            label = _field(block, "label", offset, required=False)
            labels.append(str(nid) if label is None else str(label))
            value = _field(block, "value", offset, required=False)
            values.append(-1 if value is None else int(value))
        elif key == "edge" and isinstance(block, list):
            raw_edges.append((_field(block, "source", offset), _field(block, "target", offset), offset))
    edges = []
    for s, t, offset in raw_edges:
        if s not in index or t not in index:
            raise GMLParseError(f"edge refers to unknown node ({s}, {t})", offset)
        edges.append((index[s], index[t]))
    g = build_graph(np.array(edges, dtype=np.int64).reshape(-1, 2), len(index))
    return g, labels, np.array(values, dtype=np.int64)


def football_bundle(path, seed: int = 2020) -> DatasetBundle:
    """Adjacency-as-features dataset with one labelled node per class.

    Classes are the distinct GML ``value`` fields (conferences). One node per
    class is drawn for training; validation reuses the training nodes and
    every other node is a test node.
    """
    g, names, values = read_gml_subset(path)
    classes, labels = np.unique(values, return_inverse=True)
    features = g.adjacency().toarray()
    rng = np.random.default_rng(seed)
    train = np.zeros(g.num_nodes, dtype=bool)
    for c in range(classes.shape[0]):
        members = np.flatnonzero(labels == c)
        if members.size == 0:
            raise ValueError(f"class {classes[c]} has no members")
        train[rng.choice(members)] = True
    splits = SplitMasks(train, train.copy(), ~train)
    return DatasetBundle(g, features, labels, splits, name="football", node_names=names)


# --- results ----------------------------------------------------------------

def write_metrics(path, results: dict) -> None:
    """Dump run metadata and per-model summaries as sorted-key JSON."""
    text = json.dumps(_jsonable(results), sort_keys=True, indent=2)
    if path is None or str(path) == "-":
        print(text)
        return
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_metrics(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj
