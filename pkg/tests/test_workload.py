import json
from importlib import resources

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from greengrid.model import ValidationError, dumps, load_catalog, load_workflow
from greengrid.workload import (
    PRESETS,
    CatalogSpec,
    WorkflowSpec,
    gen_catalog,
    gen_workflow,
    load_bundled,
    site_names,
)
from oracles import has_cycle


def test_single_task():
    wf = gen_workflow(WorkflowSpec(n_tasks=1, n_layers=3))
    assert len(wf) == 1 and wf.edge_count() == 0


def test_same_seed_same_workflow():
    spec = WorkflowSpec(n_tasks=25, n_layers=4, edge_density=0.3, seed=11)
    assert gen_workflow(spec) == gen_workflow(spec)
    assert gen_workflow(spec) != gen_workflow(WorkflowSpec(n_tasks=25, n_layers=4, edge_density=0.3, seed=12))


def test_layers_have_parents_and_no_cycles():
    wf = gen_workflow(WorkflowSpec(n_tasks=9, n_layers=3, edge_density=0.5, seed=3))
    ids = sorted(wf.tasks)
    layer = {tid: i % 3 for i, tid in enumerate(ids)}
    for t in wf:
        if layer[t.id] > 0:
            assert any(layer[p] == layer[t.id] - 1 for p in t.parents)
        assert all(layer[p] < layer[t.id] for p in t.parents)
    assert not has_cycle({t.id: set(t.parents) for t in wf})


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n_tasks": 0},
        {"n_layers": 0},
        {"edge_density": 1.5},
        {"cycles_range": (10, 5)},
        {"cycles_range": (0, 5)},
        {"dil_range": (0.2, 1.2)},
        {"io_range": (-1, 5)},
    ],
)
def test_invalid_workflow_spec(kwargs):
    with pytest.raises(ValidationError):
        WorkflowSpec(**kwargs)


@pytest.mark.parametrize("kwargs", [{"n_sites": 0}, {"idle_fraction_range": (0.5, 1.5)}, {"ipc_range": (0.0, 1.0)}])
def test_invalid_catalog_spec(kwargs):
    with pytest.raises(ValidationError):
        CatalogSpec(**kwargs)


def test_site_names():
    assert site_names(3) == ["A", "B", "C"]
    assert site_names(28)[-3:] == ["Z", "AA", "AB"]


def test_catalog_shape_and_determinism():
    wf = gen_workflow(WorkflowSpec(n_tasks=7, seed=1))
    spec = CatalogSpec(n_sites=3, seed=5)
    cat = gen_catalog(spec, wf)
    assert cat.site_ids == ("A", "B", "C")
    assert len(cat.ipc) == 7 * 3
    assert cat == gen_catalog(spec, wf)


def test_cpe_tracks_modeled_efficiency():
    wf = gen_workflow(WorkflowSpec(n_tasks=2))
    for seed in range(10):
        cat = gen_catalog(CatalogSpec(n_sites=4, seed=seed), wf)
        by_eff = sorted(cat.sites, key=lambda s: s.compute.freq_hz / s.compute.p_busy_w)
        cpes = [s.compute.cpe for s in by_eff]
        assert cpes == sorted(cpes)


def test_spec_from_dict_rejects_unknown():
    with pytest.raises(ValidationError):
        WorkflowSpec.from_dict({"n_tasks": 3, "fanout": 2})
    assert CatalogSpec.from_dict({"cpe_range": [1.0, 2.0]}).cpe_range == (1.0, 2.0)


ranges = st.tuples(st.integers(1, 10**6), st.integers(0, 10**6)).map(lambda t: (t[0], t[0] + t[1]))
fracs = st.tuples(st.floats(0, 1), st.floats(0, 1)).map(sorted).map(tuple)


@settings(max_examples=50, deadline=None)
@given(
    st.integers(1, 40),
    st.integers(1, 6),
    st.floats(0, 1),
    ranges,
    fracs,
    st.integers(1, 5),
    st.integers(0, 2**32),
)
def test_generated_documents_roundtrip_within_ranges(n, layers, density, cycles, dil, n_sites, seed):
    wspec = WorkflowSpec(
        n_tasks=n, n_layers=layers, edge_density=density, cycles_range=cycles, dil_range=dil,
        blocks=("narrow", "wide"), block_use_prob=0.5, seed=seed,
    )
    cspec = CatalogSpec(n_sites=n_sites, seed=seed)
    wf = gen_workflow(wspec)
    cat = gen_catalog(cspec, wf)
    assert load_workflow(dumps(wf.to_dict())) == wf
    assert load_catalog(dumps(cat.to_dict())) == cat
    for t in wf:
        assert cycles[0] <= t.cycles <= cycles[1]
        assert dil[0] <= t.dil <= dil[1]
        assert wspec.io_range[0] <= t.io_ops <= wspec.io_range[1]
    for s in cat.sites:
        c = s.compute
        assert cspec.cpe_range[0] <= c.cpe <= cspec.cpe_range[1]
        assert cspec.p_busy_range[0] <= c.p_busy_w <= cspec.p_busy_range[1]
        assert cspec.freq_range[0] <= c.freq_hz <= cspec.freq_range[1]
        lo, hi = cspec.idle_fraction_range
        assert lo * c.p_busy_w * (1 - 1e-12) <= c.p_idle_w <= hi * c.p_busy_w * (1 + 1e-12)
        assert cspec.iopsw_range[0] <= s.storage.iopsw <= cspec.iopsw_range[1]
    assert all(cspec.ipc_range[0] <= v <= cspec.ipc_range[1] for v in cat.ipc.values())


class TestEega3:
    def test_three_sites_a_b_c(self):
        wf, cat = PRESETS["eega3"].build()
        assert cat.site_ids == ("A", "B", "C")
        assert len(wf) == 30

    def test_bundled_files_match_preset(self):
        root = resources.files("greengrid") / "scenarios" / "eega3"
        wf, cat = PRESETS["eega3"].build()
        assert (root / "workflow.json").read_text() == dumps(wf.to_dict())
        assert (root / "catalog.json").read_text() == dumps(cat.to_dict())
        assert load_bundled("eega3") == (wf, cat)

    def test_cpe_spread(self):
        _, cat = PRESETS["eega3"].build()
        cpe = [s.compute.cpe for s in cat.sites]
        assert max(cpe) / min(cpe) >= 3.5

    def test_uses_five_layers(self):
        doc = json.loads(dumps(PRESETS["eega3"].build()[0].to_dict()))
        roots = [t for t in doc["tasks"] if not t["parents"]]
        assert len(roots) == 6
