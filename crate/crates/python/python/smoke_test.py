"""Quick end-to-end check of the Python bindings."""

import math

import pyratecert as rc


def main():
    fc = rc.FunctionClass(1.0, 10.0)
    assert fc.kappa == 10.0
    lo, hi = fc.interval(1.4)
    assert math.isclose(lo, 1 / 14) and math.isclose(hi, 0.14)

    cert = rc.certify(fc, c=1.0)
    assert abs(cert.rho_star - 0.9) <= 1e-3, cert
    assert cert.verify()
    assert cert.p == [[1.0]]
    assert cert.cond_p == 1.0
    assert math.isclose(rc.closed_form_rate(0.1, fc), 0.9)

    assert rc.certify(fc, c=2.1).rho_star is None

    wide = rc.certify(fc, c=1.4)
    norms, bound, ratio, violated = rc.simulate(wide, [1.0, 3.0, 10.0], policy="endpoints", seed=3)
    assert len(norms) == len(bound) == 201
    assert not violated and ratio <= 1.0

    again = rc.Certificate.from_json(wide.to_json())
    assert again.rho_star == wide.rho_star and again.verify()

    dyn = rc.certify(rc.FunctionClass.from_kappa(2.0), c=1.2, iqc="wob1")
    assert len(dyn.p) == 2 and dyn.verify()

    values, vectors = rc.eig_sym([[2.0, 1.0], [1.0, 2.0]])
    assert all(math.isclose(a, b) for a, b in zip(values, [1.0, 3.0]))
    assert len(vectors) == 2

    try:
        rc.FunctionClass(2.0, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("L < m accepted")

    print(f"smoke test ok: rho*(kappa=10, c=1.4) = {wide.rho_star:.5f}")


if __name__ == "__main__":
    main()
