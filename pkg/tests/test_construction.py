import hashlib
import math
import random
from dataclasses import replace
from fractions import Fraction

import pytest

from onesided.constants import derive_constants
from onesided.construction import (
    M0,
    ConstructionState,
    InadmissibleProfile,
    InvalidState,
    ParameterProfile,
    SearchExhausted,
    SphericalCap,
    alpha_enclosure,
    cap_inside,
    candidate_search,
    dumps,
    init,
    layer_and_disk,
    loads,
    run,
    step,
    validate,
)
from onesided.lattice import cross, det3, dot, is_complete_pair
from onesided.numerics import RealEnclosure, enclose, sqrt

# frozen output of the scaled profile, seed 0
SCALED_VECTORS = [
    (1, 1, -1),
    (8484133, 13950114, -5778326),
    (-1677637513, -1679849965, 1676542290),
    (-1343521849479, -2209098202696, 915038370380),
    (25114496984151940, 25147617754344847, -25098101315774508),
    (13098986303758859907571, 21538131834380632498400, -8921383225596841666257),
    (-2151597558674040615642773496887, -2154435065093260507707431240717, 2150192916994592985661726249365),
]
SCALED_SHA256 = "24d58ddab523fe96a6cb72421002643605e846bcea82fbe8608c84399d3402b1"
PAPER_M1 = (641042957644352379007900519957, 1054040799533857752213265947034, -436597994461504582491931725005)


def test_init_paper():
    s = init(ParameterProfile.paper())
    assert s.vectors == [M0] and s.nu == 0
    assert s.current_cap.radius <= Fraction(1, 64)
    validate(s)


def test_init_scaled_admissible():
    consts = derive_constants(128)
    p = ParameterProfile.scaled()
    assert p.admissibility(consts) == []
    # growth law M^(sigma tau - 1) / 2^e_H >= 2^e_gap M holds at M = 2^16
    assert (16 * (consts.growth - 1)).certainly_gt(p.e_H + p.e_gap)


def test_inadmissible_profile():
    with pytest.raises(InadmissibleProfile, match="growth law"):
        init(ParameterProfile(e_gap=200, e_M1=10))


def test_frozen_scaled_vectors(scaled_state):
    assert [tuple(v) for v in scaled_state.vectors] == SCALED_VECTORS


def test_frozen_paper_first_vector(paper_state):
    assert tuple(paper_state.vectors[1]) == PAPER_M1
    assert 2**99 < math.isqrt(PAPER_M1[1] ** 2 + PAPER_M1[2] ** 2) < 2**100


def test_deterministic_and_round_trip(scaled_state):
    text = dumps(scaled_state)
    assert hashlib.sha256(text.encode()).hexdigest() == SCALED_SHA256
    assert dumps(run(ParameterProfile.scaled(), 6, 0)) == text
    assert dumps(loads(text)) == text
    assert loads(text) == scaled_state


def test_other_seeds_progress():
    for seed in (1, 2, 3):
        s = run(ParameterProfile.scaled(), 4, seed)
        assert s.nu == 4


def _perturbed(state, delta):
    cap = state.current_cap
    c = (cap.center[0] + delta,) + cap.center[1:]
    last = replace(state.steps[-1], cap=SphericalCap(c, cap.radius))
    return replace(state, steps=state.steps[:-1] + (last,))


@pytest.mark.parametrize("nu", [0, 3])
def test_tampered_state_fails_before_search(scaled_state, nu):
    s = replace(scaled_state, steps=scaled_state.steps[: nu + 1])
    with pytest.raises(InvalidState):
        step(_perturbed(s, Fraction(1, 1000)))


def test_wrong_first_vector_rejected(scaled_state):
    bad = replace(scaled_state.steps[0], m=type(M0)(1, 2, -1))
    with pytest.raises(InvalidState):
        validate(replace(scaled_state, steps=(bad,) + scaled_state.steps[1:]))


def test_search_exhausted_reports_diagnostics(scaled_state, monkeypatch):
    import onesided.construction as c

    s = replace(scaled_state, steps=scaled_state.steps[:3])
    monkeypatch.setattr(c, "candidate_search", lambda state, geometry: [])
    with pytest.raises(SearchExhausted) as e:
        step(s)
    assert e.value.diagnostics == {"empty_disk": 1}
    # every candidate fails a filter: the counts name the filter
    monkeypatch.setattr(c, "candidate_search", lambda state, geometry: [state.steps[-2].m, state.steps[-1].m])
    with pytest.raises(SearchExhausted) as e:
        step(s)
    assert sum(e.value.diagnostics.values()) == 2


@pytest.mark.parametrize("nu", [1, 2, 3, 4, 5])
def test_layer_geometry(scaled_state, nu):
    s = replace(scaled_state, steps=scaled_state.steps[: nu + 1])
    g = layer_and_disk(s)
    mp_, mc = s.steps[-2].m, s.steps[-1].m
    N = cross(mp_, mc)
    bits = g.layer_spacing.bits
    # layers are {x : N.x = k}; n sits on the first one
    assert abs(dot(N, g.n_basis)) == 1
    assert abs(det3(g.n_basis, mp_, mc)) == 1
    dN = sqrt(enclose(sum(x * x for x in N), bits))
    assert (g.layer_spacing * dN).contains(1)
    assert (g.layer_spacing * dN - 1).width < Fraction(1, 2**100)
    # the disk centre lies on layer mu*
    mu, a0, b0 = g.w_exact
    wc = [mu * g.n_basis[k] + a0 * mp_[k] + b0 * mc[k] for k in range(3)]
    assert dot(N, wc) == g.mu_star * dot(N, g.n_basis)
    assert all(x.contains(y) for x, y in zip(g.w_center, wc))


@pytest.mark.parametrize("nu", [1, 3, 5])
def test_disk_boundary_inside_window(scaled_state, nu):
    s = replace(scaled_state, steps=scaled_state.steps[: nu + 1])
    g = layer_and_disk(s)
    H = float(s.steps[-1].H.mid)
    N = [float(x) for x in cross(s.steps[-2].m, s.steps[-1].m)]
    nN = math.sqrt(sum(x * x for x in N))
    N = [x / nN for x in N]
    # orthonormal frame of the layer plane
    t = [1.0, 0.0, 0.0] if abs(N[0]) < 0.9 else [0.0, 1.0, 0.0]
    e1 = [t[k] - dot(t, N) * N[k] for k in range(3)]
    l1 = math.sqrt(sum(x * x for x in e1))
    e1 = [x / l1 for x in e1]
    e2 = [N[1] * e1[2] - N[2] * e1[1], N[2] * e1[0] - N[0] * e1[2], N[0] * e1[1] - N[1] * e1[0]]
    w = [float(x.mid) for x in g.w_center]
    R = float(g.disk_radius.mid)
    for k in range(100):
        th = 2 * math.pi * k / 100
        p = [w[i] + R * (math.cos(th) * e1[i] + math.sin(th) * e2[i]) for i in range(3)]
        r = math.hypot(p[1], p[2])
        assert H * (1 - 1e-12) <= r <= 2 * H * (1 + 1e-12)


@pytest.mark.parametrize("nu", [1, 2, 3, 4, 5])
def test_candidates(scaled_state, nu):
    s = replace(scaled_state, steps=scaled_state.steps[: nu + 1])
    g = layer_and_disk(s)
    cands = candidate_search(s, g)
    assert len(cands) >= 1
    mp_, mc = s.steps[-2].m, s.steps[-1].m
    mu, a0, b0 = g.w_exact
    wc = [mu * g.n_basis[k] + a0 * mp_[k] + b0 * mc[k] for k in range(3)]
    R2 = g.disk_radius.lo ** 2
    for c in cands:
        assert is_complete_pair(mc, c)
        assert sum((c[k] - wc[k]) ** 2 for k in range(3)) <= R2
        assert dot(cross(mp_, mc), c) == g.mu_star * dot(cross(mp_, mc), g.n_basis)
    # the chosen vector is one of the candidates
    assert scaled_state.steps[nu + 1].m in cands


def test_cap_nesting_and_radius_ratio(scaled_state):
    p = scaled_state.profile
    for a, b in zip(scaled_state.steps, scaled_state.steps[1:]):
        assert cap_inside(b.cap, a.cap)
        assert cap_inside(b.cap, a.cap, Fraction(1, 2))
        if a.m != M0:
            assert b.cap.radius <= a.cap.radius / 2**p.e_gap


def test_new_cap_on_plane(scaled_state):
    for st in scaled_state.steps[1:]:
        eta = st.cap.center
        m = st.m
        assert abs(dot(m, eta)) <= sum(abs(x) for x in m) * Fraction(1, 2**120)
        assert abs(sum(c * c for c in eta) - 1) < Fraction(1, 2**120)


def _sample_cap(cap: SphericalCap, rng, k):
    """Points eta + t v with v tangent; their rays meet the sphere inside the cap."""
    c = cap.center
    cf = [float(x) for x in c]
    pts = []
    for _ in range(k):
        v = [rng.gauss(0, 1) for _ in range(3)]
        proj = sum(a * b for a, b in zip(v, cf))
        v = [Fraction(v[i] - proj * cf[i]) for i in range(3)]
        # make v exactly orthogonal to the centre
        pr = sum(a * b for a, b in zip(v, c)) / sum(x * x for x in c)
        v = [v[i] - pr * c[i] for i in range(3)]
        n2 = sum(x * x for x in v)
        t = Fraction(rng.random()) * cap.radius * Fraction(999, 1000)
        scale = t / Fraction(math.sqrt(n2)) if n2 else 0
        pts.append([c[i] + scale * v[i] for i in range(3)])
    return pts


def test_sampled_cap_points_in_window(scaled_state):
    rng = random.Random(7)
    consts = derive_constants(512)
    p = scaled_state.profile
    for prev, new in zip(scaled_state.steps[1:], scaled_state.steps[2:]):
        m = prev.m
        M = sqrt(enclose(new.m[1] ** 2 + new.m[2] ** 2, 512))
        top = 1 / M**consts.omega
        low = top / 2**p.e_zeta
        for x in _sample_cap(new.cap, rng, 100):
            z = RealEnclosure.exact(m[0] + Fraction(m[1] * x[1] + m[2] * x[2]) / x[0], 512)
            assert low.lo <= z.lo and z.hi <= top.hi


def test_alpha_enclosures_narrow_and_nested(scaled_state):
    prev = None
    for k in range(2, 7):
        s = replace(scaled_state, steps=scaled_state.steps[: k + 1])
        a = alpha_enclosure(s)
        cap = s.current_cap
        x0min = cap.center[0] - cap.radius
        for x in a:
            assert x.width <= 2 * cap.radius / x0min**2 * 2
        if prev:
            for x, y in zip(a, prev):
                assert y.lo <= x.lo and x.hi <= y.hi
        prev = a
    assert all(x.width < Fraction(1, 10**20) for x in prev)


def test_state_type():
    s = init(ParameterProfile.scaled(), 3)
    assert isinstance(s, ConstructionState)
    assert s.current_cap.center[0] > 0
