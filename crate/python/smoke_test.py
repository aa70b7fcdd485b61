"""Smoke test for the foliated_py extension.

Build first with `maturin develop -m crates/py/Cargo.toml`, or with
`cargo build --release -p foliated-py`; in the latter case the script loads
target/release/libfoliated_py.so directly.
"""

import importlib.machinery
import importlib.util
import json
import math
import pathlib
import sys


def load():
    try:
        import foliated_py

        return foliated_py
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parent.parent
    for name in ("libfoliated_py.so", "libfoliated_py.dylib", "foliated_py.dll"):
        lib = root / "target" / "release" / name
        if lib.exists():
            loader = importlib.machinery.ExtensionFileLoader("foliated_py", str(lib))
            spec = importlib.util.spec_from_file_location("foliated_py", lib, loader=loader)
            mod = importlib.util.module_from_spec(spec)
            loader.exec_module(mod)
            return mod
    sys.exit("foliated_py not built; run `cargo build --release -p foliated-py`")


def main():
    fp = load()

    alpha = fp.neumann_root(1, 1)
    assert abs(alpha - 1.8411837813) < 1e-9, alpha
    assert abs(fp.first_eigenvalue() - alpha * alpha) < 1e-12

    grid = fp.Grid(32, 64)
    assert len(grid) == 32 * 64
    params = fp.Params(0.0, 2.0)
    res = fp.minimize(params, grid, n_starts=2)
    assert res.converged
    assert abs(res.lambda_ - alpha * alpha) / (alpha * alpha) < 0.02, res.lambda_
    assert res.foliated_defect < 5e-2
    assert abs(res.u.integral()) < 1e-8
    assert abs(res.u.lp_norm(2.0) - 1.0) < 1e-8
    c, d = fp.multipliers_from_identities(params, res.u)
    assert abs(d + res.lambda_) < 1e-3 * abs(d)
    assert json.loads(res.to_json())["converged"] is True

    vals = [math.cos(a) + 0.3 * math.sin(2 * a) for _ in grid.r_nodes for a in grid.a_nodes]
    f = fp.Field(grid, vals)
    fh = fp.two_point_rearrange(f, 0.5 * 2 * math.pi / grid.n_a)
    assert sorted(fh.values()) == sorted(f.values())
    s = fp.foliated_symmetrize(f)
    axis, fol, _, _ = fp.symmetry_report(s)
    assert fol < 1e-12, (axis, fol)
    m = fp.mollify(f, 0.2)
    assert len(m) == len(f)
    assert abs(fp.eval_objective(params, f) - fp.eval_objective(params, f.rotate_steps(5))) < 1e-10

    try:
        fp.Grid(1, 64)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid grid accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
