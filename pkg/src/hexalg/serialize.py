"""Structured documents: polynomials, fitted-table manifests, reports.

All documents are JSON with sorted keys and canonical term order, so a
round trip is byte-identical.  The manifest pins everything a symbolic run
needs so it never has to re-run the numerical oracle: the epsilon
convention, every basis-B table entry with provenance, and the dilatation
weight calibration.
"""

import json

from .coeff import mpq
from .ncalg import (
    NCPoly, ConstructionError, atom_name, canonical_atom,
    MINV, M, P, S, X, IDX4, is_S, is_X, atom_index,
)

__all__ = [
    "FORMAT_VERSION", "LoadError",
    "poly_to_obj", "obj_to_poly", "poly_bytes", "poly_from_bytes",
    "manifest_doc", "manifest_fit_polys", "manifest_from_fits",
    "write_manifest", "read_manifest", "report_doc", "render_report",
]

FORMAT_VERSION = "1"


class LoadError(ValueError):
    """Malformed or version-mismatched document."""


def _frac_pair(q):
    q = mpq(q)
    return [int(q.numerator), int(q.denominator)]


def poly_to_obj(p):
    terms = []
    for (word, h), (re_, im) in p.items():
        terms.append({
            "coeff": {"re": _frac_pair(re_), "im": _frac_pair(im),
                      "hbar": int(h)},
            "word": [atom_name(a) for a in word],
        })
    return {"terms": terms}


def obj_to_poly(obj):
    try:
        terms = obj["terms"]
    except (TypeError, KeyError) as exc:
        raise LoadError(f"polynomial document missing 'terms': {exc}")
    out = NCPoly.zero()
    for t in terms:
        try:
            c = t["coeff"]
            re_ = mpq(c["re"][0], c["re"][1])
            im = mpq(c["im"][0], c["im"][1])
            h = int(c["hbar"])
            atoms = []
            for name in t["word"]:
                aid, sign = canonical_atom(str(name))
                if sign < 0:
                    raise LoadError(
                        f"non-canonical atom {name!r} in document")
                atoms.append(aid)
        except (TypeError, KeyError, IndexError, ConstructionError) as exc:
            raise LoadError(f"malformed polynomial term: {exc}")
        if h < 0:
            raise LoadError("negative hbar power in document")
        out = out + NCPoly.word(tuple(atoms), (re_, im), h)
    return out


def _dumps(doc):
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def poly_bytes(p):
    return _dumps(poly_to_obj(p)).encode()


def poly_from_bytes(data):
    return obj_to_poly(json.loads(data.decode()))


# -- manifest -------------------------------------------------------------

_DERIVED_REQUIRED = (
    [("S", mu, "S", nu) for mu in IDX4 for nu in range(mu)]
    + [("X", mu, "M", None) for mu in IDX4]
    + [("X", mu, "S", nu) for mu in IDX4 for nu in IDX4]
    + [("X", mu, "X", nu) for mu in IDX4 for nu in range(mu)]
)


def _pair_key(left, right):
    return f"{atom_name(left)}|{atom_name(right)}"


def manifest_doc(rw, weight, eps_convention="+1"):
    """Manifest document for a built basis-B system."""
    entries = []
    for e in sorted(rw.entries, key=lambda e: (e.left, e.right)):
        entries.append({
            "left": atom_name(e.left),
            "right": atom_name(e.right),
            "bracket": poly_to_obj(e.bracket),
            "provenance": e.provenance,
        })
    return {
        "version": FORMAT_VERSION,
        "epsilon_convention": eps_convention,
        "calibration": {"D_weight": _frac_pair(weight)},
        "entries": entries,
    }


def manifest_fit_polys(doc):
    """Extract the derived entry polynomials a basis-B build needs.

    Raises LoadError naming the first missing derived entry.
    """
    if not isinstance(doc, dict):
        raise LoadError("manifest must be a mapping")
    if doc.get("version") != FORMAT_VERSION:
        raise LoadError(
            f"manifest version {doc.get('version')!r} != {FORMAT_VERSION!r}")
    found = {}
    for e in doc.get("entries", ()):
        try:
            left, _ = canonical_atom(str(e["left"]))
            right, _ = canonical_atom(str(e["right"]))
            found[(left, right)] = obj_to_poly(e["bracket"])
        except (TypeError, KeyError, ConstructionError) as exc:
            raise LoadError(f"malformed manifest entry: {exc}")
    out = {}
    ctor = {"S": S, "X": X, "M": lambda _: M}
    for (k1, i1, k2, i2) in _DERIVED_REQUIRED:
        left = ctor[k1](i1)
        right = ctor[k2](i2) if i2 is not None else M
        if (left, right) not in found:
            raise LoadError(
                "manifest missing derived entry "
                f"({atom_name(left)},{atom_name(right)})")
        out[(k1, i1, k2, i2)] = found[(left, right)]
    return out


def manifest_from_fits(fits, weight, eps_convention="+1"):
    """Build the manifest document from oracle fit results."""
    from . import tables
    derived = {}
    for key, fit in fits.items():
        derived[key] = fit.poly()
    rw = tables.basis_B(derived_polys=derived)
    return manifest_doc(rw, weight, eps_convention)


def write_manifest(doc, path):
    with open(path, "w") as fh:
        fh.write(_dumps(doc))


def read_manifest(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise LoadError(f"malformed manifest: {exc}")
    manifest_fit_polys(doc)  # validates
    return doc


# -- reports -------------------------------------------------------------

def report_doc(command, config, results, deterministic=False):
    """Top-level report: {command, config echo, results, version}."""
    rows = []
    for r in results:
        rows.append({
            "id": r["id"],
            "pass": bool(r["pass"]),
            "residual": r["residual"],
            "time_ms": 0 if deterministic else int(r.get("time_ms", 0)),
        })
    return {
        "command": command,
        "config": config,
        "results": rows,
        "version": FORMAT_VERSION,
    }


def render_report(doc, fmt="text"):
    if fmt == "json":
        return _dumps(doc)
    lines = [f"# {doc['command']}"]
    for r in doc["results"]:
        status = "pass" if r["pass"] else "FAIL"
        lines.append(
            f"{status:4s}  {r['id']}  residual={r['residual']}"
            f"  t={r['time_ms']}ms")
    npass = sum(1 for r in doc["results"] if r["pass"])
    lines.append(f"# {npass}/{len(doc['results'])} passed")
    return "\n".join(lines) + "\n"
