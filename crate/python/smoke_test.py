"""Smoke test for the `ringq` extension module.

Build and install first:

    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/ringq-*.whl
    python python/smoke_test.py
"""

import math

import ringq


def close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


def main():
    inf = ringq.ExtPoint.infinity(2)
    origin = ringq.ExtPoint([0.0, 0.0])
    assert close(ringq.chordal_distance(origin, inf), 1.0, 1e-12)
    assert ringq.ExtPoint([2.0, 0.0]).antipodal().coords == [-0.5, -0.0]
    assert close(ringq.chordal_radius_to_euclidean(math.sqrt(3) / 2), math.sqrt(3), 1e-14)

    exact = ringq.ring_modulus_exact(0.5, 1.0, 2)
    assert close(exact, 2 * math.pi / math.log(2), 1e-14)
    cap = ringq.capacity_ring(2, 0.5, 1.0, 64)
    assert close(cap.value, exact, 0.05), cap.value

    q = ringq.QProfile("log2", 2)
    value, diverges = q.dini(1.0)
    assert not diverges and close(value, 2.0, 1e-6), value
    assert ringq.QProfile("const:1", 2).dini(0.3)[1]
    f_val, target = ringq.QProfile("log", 3).weighted_energy(1e-3, 0.2)
    assert close(f_val, target, 1e-6)
    assert close(ringq.canonical_integral(math.exp(-5), math.exp(-1)), math.log(5), 1e-8)

    c = ringq.make_constants(2, 2 * math.pi, 1.0, 4.0)
    assert c.alpha_n == 32.0 and c.gamma_np == 1.0
    one = ringq.QProfile("const:1", 2)
    assert close(ringq.dini_bound(one, 0.3, 1e-4, c.alpha_n), c.alpha_n * 1e-4 / 0.3, 1e-9)

    f8 = ringq.RadialMap.family_member(q, 8)
    assert close(f8.inner_dilatation(0.5), q.q_mean(0.5), 1e-6)
    check = ringq.verify_ring_q_inequality(ringq.RadialMap.identity(2), one, 0.1, 0.6, samples=20)
    assert check.violations == 0 and abs(check.extremal_slack) < 1e-6 * check.lhs
    diag, sigma = ringq.family_diagonal(q, 16)
    assert all(v >= sigma for _, v in diag)

    seg = ringq.CompactSet.segment([-0.5, 0.0], [0.5, 0.2])
    c_val, argmin = ringq.c_set(seg, grid=32)
    assert 0.0 < c_val <= 1.05 * ringq.set_function_cap(2), c_val
    full = ringq.CompactSet.cap(origin, math.sqrt(2) / 2)
    m = ringq.m_standard(full, origin, grid=48)
    assert close(m, ringq.set_function_cap(2), 0.05), m

    try:
        ringq.capacity_ring(2, 1.0, 0.5, 64)
    except ValueError:
        pass
    else:
        raise AssertionError("inverted ring accepted")

    print("ringq smoke test passed")


if __name__ == "__main__":
    main()
