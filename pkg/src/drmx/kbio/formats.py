"""Text formats for features, vectors and networks.

Every writer takes an optional ``header`` mapping that is emitted as ``%``
comment lines, so each artifact records the seed and configuration that
produced it.
"""

from __future__ import annotations

import json
from typing import Dict, List, Optional

import numpy as np

from ..drm import Network
from ..errors import BadDims, ParseError
from ..features import FeatureDef, FeatureSet
from ..logic import Compound, Num
from ..vectorizer import FeatureVector, VectorizedDataset
from .syntax import clause_from_term, parse_statements, parse_term

NETWORK_VERSION = "drmx-network 1"


def header_lines(header: Optional[Dict]) -> str:
    if not header:
        return ""
    out = []
    for key, value in header.items():
        if not isinstance(value, str):
            value = json.dumps(value, sort_keys=True, separators=(",", ":"))
        out.append(f"% {key}: {value}\n")
    return "".join(out)


def read_header(text: str) -> Dict[str, str]:
    """The leading ``% key: value`` lines of an artifact."""
    out = {}
    for line in text.splitlines():
        if not line.startswith("%"):
            if line.strip() and not line.startswith(NETWORK_VERSION):
                break
            continue
        key, sep, value = line[1:].strip().partition(":")
        if sep:
            out[key.strip()] = value.strip()
    return out


# --- features ----------------------------------------------------------------

def format_features(fs: FeatureSet, header: Optional[Dict] = None) -> str:
    lines = [header_lines(header)]
    for f in fs:
        lines.append(f"feature({f.index}, ({f.clause.head} :- "
                     f"{', '.join(map(str, f.body))})).\n")
        if f.source_example is not None:
            lines.append(f"feature_source({f.index}, {f.source_example}, {f.source_class}).\n")
    return "".join(lines)


def parse_features(text: str) -> FeatureSet:
    defs: Dict[int, tuple] = {}
    sources: Dict[int, tuple] = {}
    order: List[int] = []
    for st in parse_statements(text):
        h = st.head
        if st.body or not isinstance(h, Compound) or h.functor not in ("feature", "feature_source"):
            raise ParseError("expected feature/2 or feature_source/3", st.line, st.col, str(h))
        idx_t = h.args[0]
        if not (isinstance(idx_t, Num) and idx_t.value.denominator == 1 and idx_t.value > 0):
            raise ParseError("feature index must be a positive integer", st.line, st.col, str(idx_t))
        idx = int(idx_t.value)
        if h.functor == "feature":
            if len(h.args) != 2:
                raise ParseError("expected feature(Idx, (Head :- Body))", st.line, st.col, str(h))
            if idx in defs:
                raise ParseError(f"feature {idx} defined twice", st.line, st.col)
            clause = clause_from_term(h.args[1], st.line, st.col)
            expected = f"f_{idx}"
            if clause.head.predicate != expected:
                raise ParseError(f"feature {idx} must be named {expected}", st.line, st.col,
                                 clause.head.predicate)
            defs[idx] = (clause, st.line, st.col)
            order.append(idx)
        else:
            if len(h.args) != 3:
                raise ParseError("expected feature_source(Idx, Example, Class)", st.line, st.col)
            sources[idx] = (h.args[1], h.args[2])
    features = []
    for idx in order:
        clause, line, col = defs[idx]
        src = sources.get(idx, (None, None))
        try:
            features.append(FeatureDef(idx, clause, *src))
        except ValueError as exc:
            raise ParseError(str(exc), line, col) from None
    try:
        return FeatureSet(features)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


# --- vectors -----------------------------------------------------------------

def format_vectors(data: VectorizedDataset, header: Optional[Dict] = None) -> str:
    lines = [header_lines(header), f"features {data.feature_count} instances {len(data)}\n"]
    for v, label in zip(data.vectors, data.labels):
        lines.append(f"{v.instance_id} {v.to_bitstring() or '-'} {label}\n")
    return "".join(lines)


def parse_vectors(text: str, class_set=()) -> VectorizedDataset:
    rows = [(n, line) for n, line in enumerate(text.splitlines(), 1)
            if line.strip() and not line.lstrip().startswith("%")]
    if not rows:
        raise ParseError("empty vector file")
    n0, first = rows[0]
    parts = first.split()
    if len(parts) != 4 or parts[0] != "features" or parts[2] != "instances" \
            or not parts[1].isdigit() or not parts[3].isdigit():
        raise ParseError("expected 'features N instances M'", n0, 1, first)
    width, count = int(parts[1]), int(parts[3])
    vectors, labels = [], []
    for n, line in rows[1:]:
        cols = line.split()
        if len(cols) != 3:
            raise ParseError("expected 'id bitstring label'", n, 1, line)
        ident, bits, label = cols
        bits = "" if bits == "-" else bits
        if len(bits) != width or set(bits) - {"0", "1"}:
            raise ParseError(f"bitstring must be {width} binary digits", n,
                             line.index(cols[1]) + 1, cols[1])
        try:
            vectors.append(FeatureVector.from_bits(bits, parse_term(ident)))
            labels.append(parse_term(label))
        except ParseError as exc:
            raise ParseError(exc.message, n, 1, line) from None
    if len(vectors) != count:
        raise ParseError(f"header promises {count} instances, found {len(vectors)}", n0, 1)
    return VectorizedDataset(tuple(vectors), tuple(labels), width, tuple(class_set))


# --- networks ----------------------------------------------------------------

def _row(values) -> str:
    return " ".join(repr(float(x)) for x in values)


def format_network(net: Network, header: Optional[Dict] = None) -> str:
    lines = [NETWORK_VERSION + "\n", header_lines(header)]
    lines.append("classes " + " ".join(str(c) for c in net.classes) + "\n")
    lines.append("dims " + " ".join(map(str, net.dims)) + "\n")
    lines.append("dropout " + _row(net.dropout) + "\n")
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        lines.append(f"weights {l} {w.shape[0]} {w.shape[1]}\n")
        lines.extend(_row(r) + "\n" for r in w)
        lines.append(f"biases {l} {b.shape[0]}\n")
        lines.append(_row(b) + "\n")
    return "".join(lines)


def parse_network(text: str) -> Network:
    lines = [ln for ln in text.splitlines() if not ln.startswith("%")]
    if not lines or lines[0].strip() != NETWORK_VERSION:
        raise ParseError(f"network file must start with '{NETWORK_VERSION}'", 1, 1)
    pos = 1

    def take(prefix):
        nonlocal pos
        if pos >= len(lines) or not lines[pos].startswith(prefix):
            raise ParseError(f"expected '{prefix}'", pos + 1, 1)
        pos += 1
        return lines[pos - 1][len(prefix):].split()

    def floats(count):
        nonlocal pos
        if pos >= len(lines):
            raise ParseError("truncated network file", pos + 1, 1)
        vals = lines[pos].split()
        if len(vals) != count:
            raise ParseError(f"expected {count} numbers", pos + 1, 1)
        pos += 1
        try:
            return [float(v) for v in vals]
        except ValueError:
            raise ParseError("bad number", pos, 1) from None

    try:
        classes = tuple(parse_term(c) for c in take("classes"))
        dims = tuple(int(d) for d in take("dims"))
        dropout = tuple(float(d) for d in take("dropout"))
        weights, biases = [], []
        for l in range(len(dims) - 1):
            _, rows, cols = map(int, take("weights "))
            weights.append(np.array([floats(cols) for _ in range(rows)]).reshape(rows, cols))
            (n,) = map(int, take("biases ")[1:])
            biases.append(np.array(floats(n)))
    except ValueError as exc:
        raise ParseError(f"malformed network file: {exc}", pos + 1, 1) from None
    try:
        return Network(dims, weights, biases, dropout, classes)
    except BadDims as exc:
        raise ParseError(str(exc)) from None
