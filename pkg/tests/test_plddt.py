"""Structure-score ingestion and the confidence gate."""

import json
import random
from pathlib import Path

import pytest

from pepgate.errors import (
    MalformedAtomLine,
    MissingCaAtom,
    NoAtomRecords,
    SchemaError,
    ValueOutOfRange,
)
from pepgate.plddt import (
    AGGREGATORS,
    PlddtRecord,
    ScoreSource,
    mean_plddt,
    median_plddt,
    min_plddt,
    parse_plddt_json,
    parse_plddt_pdb,
    structure_filter,
)

GOLDEN = Path(__file__).parent / "data" / "plddt_golden.pdb"


def synthesize_pdb(values, chain="A", resseqs=None, atom_names=(" N  ", " CA ", " C  ")):
    """Minimal writer used to exercise the fixed-column parse contract."""
    if resseqs is None:
        resseqs = range(1, len(values) + 1)
    lines = ["REMARK   1 SYNTHESIZED FOR TESTS"]
    serial = 1
    for resseq, b in zip(resseqs, values):
        for name in atom_names:
            elem = name.strip()[0]
            line = (
                f"ATOM  {serial:5d} {name} ALA {chain}{resseq:4d}    "
                f"{serial * 1.5:8.3f}{serial * 0.5:8.3f}{float(resseq):8.3f}"
                f"{1.00:6.2f}{b:6.2f}          {elem:>2s}"
            )
            # self-check the fixed-column contract the parser relies on
            assert len(line) == 78 and line[21] == chain and int(line[22:26]) == resseq
            lines.append(line)
            serial += 1
    lines.append("END")
    return "\n".join(lines) + "\n"


def jrec(sequence_id, values):
    return PlddtRecord(sequence_id, tuple(values), ScoreSource.JSON_SCORES)


# -- PDB parsing ---------------------------------------------------------------


def test_golden_file_parses_exactly():
    with pytest.warns(UserWarning, match="chain"):
        rec = parse_plddt_pdb(GOLDEN.read_text(), "golden")
    assert rec.per_residue == (85.0, 60.0)
    assert rec.sequence_id == "golden"
    assert rec.source is ScoreSource.PDB_BFACTOR
    assert mean_plddt(rec) == 72.5


def test_golden_file_skips_other_chains():
    with pytest.warns(UserWarning):
        rec = parse_plddt_pdb(GOLDEN.read_text(), "golden")
    assert 40.0 not in rec.per_residue  # chain B


def test_synthesized_round_trip():
    rng = random.Random(81)
    for _ in range(20):
        n = rng.randint(1, 40)
        # two-decimal values survive the %6.2f column format bit for bit
        values = tuple(float(f"{rng.uniform(0, 100):.2f}") for _ in range(n))
        rec = parse_plddt_pdb(synthesize_pdb(values), f"s{n}")
        assert rec.per_residue == values


def test_residues_ordered_by_number():
    text = synthesize_pdb([10.0, 20.0, 30.0], resseqs=[5, 2, 9])
    rec = parse_plddt_pdb(text, "scrambled")
    assert rec.per_residue == (20.0, 10.0, 30.0)


def test_duplicate_ca_keeps_first():
    text = synthesize_pdb([30.0, 60.0], resseqs=[1, 1], atom_names=(" CA ",))
    rec = parse_plddt_pdb(text, "altloc")
    assert rec.per_residue == (30.0,)


def test_first_model_only():
    model1 = synthesize_pdb([50.0]).replace("END\n", "")
    model2 = synthesize_pdb([90.0]).replace("END\n", "")
    text = "MODEL        1\n" + model1 + "ENDMDL\nMODEL        2\n" + model2 + "ENDMDL\nEND\n"
    with pytest.warns(UserWarning):
        rec = parse_plddt_pdb(text, "multi")
    assert rec.per_residue == (50.0,)


def test_hetatm_only_raises():
    text = "HETATM    1  O   HOH A   1      10.000  10.000  10.000  1.00 50.00           O\nEND\n"
    with pytest.raises(NoAtomRecords):
        parse_plddt_pdb(text, "waters")


def test_empty_text_raises():
    with pytest.raises(NoAtomRecords):
        parse_plddt_pdb("", "empty")


def test_missing_ca_names_residue():
    text = synthesize_pdb([42.0], atom_names=(" N  ", " C  "))
    with pytest.raises(MissingCaAtom) as err:
        parse_plddt_pdb(text, "headless")
    assert err.value.residue == 1


def test_out_of_range_b_factor():
    good = synthesize_pdb([50.0], atom_names=(" CA ",))
    bad = good.replace(" 50.00", "150.00")
    with pytest.raises(ValueOutOfRange) as err:
        parse_plddt_pdb(bad, "overconfident")
    assert err.value.value == 150.0


def test_short_line_is_malformed():
    text = "REMARK   1\nATOM      1  CA  ALA A   1\nEND\n"
    with pytest.raises(MalformedAtomLine) as err:
        parse_plddt_pdb(text, "truncated")
    assert err.value.line_number == 2


def test_garbled_residue_number():
    good = synthesize_pdb([50.0], atom_names=(" CA ",))
    line = good.splitlines()[1]
    bad = good.replace(line, line[:22] + "X  1" + line[26:])
    with pytest.raises(MalformedAtomLine):
        parse_plddt_pdb(bad, "garbled")


def test_garbled_b_factor():
    good = synthesize_pdb([50.0], atom_names=(" CA ",))
    line = good.splitlines()[1]
    bad = good.replace(line, line[:60] + "??????" + line[66:])
    with pytest.raises(MalformedAtomLine):
        parse_plddt_pdb(bad, "garbled")


# -- JSON parsing --------------------------------------------------------------


def test_json_example():
    records = parse_plddt_json('[{"id":"s1","plddt":[70.0, 90.0]}]')
    assert len(records) == 1
    assert records[0].sequence_id == "s1"
    assert records[0].per_residue == (70.0, 90.0)
    assert records[0].source is ScoreSource.JSON_SCORES
    assert mean_plddt(records[0]) == 80.0


def test_json_empty_array_is_empty_batch():
    assert parse_plddt_json("[]") == []


def test_json_integers_accepted():
    records = parse_plddt_json('[{"id":"s1","plddt":[70, 90]}]')
    assert records[0].per_residue == (70.0, 90.0)


def test_json_schema_violations():
    cases = [
        ("not json at all", "$"),
        ('{"id":"s1","plddt":[70]}', "$"),
        ('[{"plddt":[70]}]', "$[0].id"),
        ('[{"id":"s1"}]', "$[0].plddt"),
        ('[{"id":"","plddt":[70]}]', "$[0].id"),
        ('[{"id":7,"plddt":[70]}]', "$[0].id"),
        ('[{"id":"s1","plddt":[]}]', "$[0].plddt"),
        ('[{"id":"s1","plddt":"70"}]', "$[0].plddt"),
        ('[{"id":"s1","plddt":[70,"x"]}]', "$[0].plddt[1]"),
        ('[{"id":"s1","plddt":[70,true]}]', "$[0].plddt[1]"),
        ('[42]', "$[0]"),
    ]
    for text, path in cases:
        with pytest.raises(SchemaError) as err:
            parse_plddt_json(text)
        assert err.value.path == path, text


def test_json_out_of_range():
    with pytest.raises(ValueOutOfRange):
        parse_plddt_json('[{"id":"s1","plddt":[70, 101.0]}]')
    with pytest.raises(ValueOutOfRange):
        parse_plddt_json('[{"id":"s1","plddt":[-0.5]}]')


def test_json_round_trip_through_dump():
    rng = random.Random(82)
    entries = [
        {"id": f"s{i}", "plddt": [round(rng.uniform(0, 100), 3) for _ in range(rng.randint(1, 8))]}
        for i in range(10)
    ]
    records = parse_plddt_json(json.dumps(entries))
    assert [r.sequence_id for r in records] == [e["id"] for e in entries]
    for rec, entry in zip(records, entries):
        assert list(rec.per_residue) == entry["plddt"]


# -- record validation and aggregation ------------------------------------------


def test_record_validation():
    with pytest.raises(ValueError):
        jrec("s1", [])
    with pytest.raises(ValueError):
        PlddtRecord("", (70.0,), ScoreSource.JSON_SCORES)
    with pytest.raises(ValueOutOfRange):
        jrec("s1", [100.5])
    with pytest.raises(ValueOutOfRange):
        jrec("s1", [float("nan")])
    assert len(jrec("s1", [1.0, 2.0, 3.0])) == 3


def test_mean_examples():
    assert mean_plddt(jrec("a", [85.0, 60.0])) == 72.5
    assert mean_plddt(jrec("b", [70.0])) == 70.0
    rng = random.Random(83)
    for _ in range(20):
        c = rng.uniform(0, 100)
        n = rng.randint(1, 30)
        assert mean_plddt(jrec("c", [c] * n)) == pytest.approx(c, abs=1e-12)


def test_aggregators():
    rec = jrec("a", [60.0, 71.0, 100.0])
    assert min_plddt(rec) == 60.0
    assert median_plddt(rec) == 71.0
    assert set(AGGREGATORS) == {"mean", "min", "median"}
    assert AGGREGATORS["mean"] is mean_plddt


# -- the gate -------------------------------------------------------------------


def test_filter_is_strict_at_threshold():
    records = [jrec("a", [85.0, 60.0]), jrec("b", [70.0]), jrec("c", [69.9])]
    passed, failed = structure_filter(records, 70.0)
    assert [r.sequence_id for r in passed] == ["a"]
    assert [r.sequence_id for r in failed] == ["b", "c"]


def test_filter_empty_input():
    assert structure_filter([], 70.0) == ([], [])


def test_filter_threshold_zero():
    records = [jrec("a", [0.0]), jrec("b", [0.1])]
    passed, failed = structure_filter(records, 0.0)
    assert [r.sequence_id for r in passed] == ["b"]
    assert [r.sequence_id for r in failed] == ["a"]


def test_filter_partition_property():
    rng = random.Random(84)
    records = [
        jrec(f"s{i}", [rng.uniform(0, 100) for _ in range(rng.randint(1, 10))])
        for i in range(50)
    ]
    threshold = rng.uniform(20, 90)
    passed, failed = structure_filter(records, threshold)
    assert len(passed) + len(failed) == len(records)
    assert not {r.sequence_id for r in passed} & {r.sequence_id for r in failed}
    survivors = iter(r.sequence_id for r in records)
    for rec in passed:  # order preserved: pass ids appear in input order
        assert rec.sequence_id in survivors
    for rec in records:
        expected = mean_plddt(rec) > threshold
        assert (rec in passed) == expected


def test_filter_respects_aggregator():
    rec = jrec("tail", [95.0, 95.0, 40.0])  # mean 76.7, min 40
    assert structure_filter([rec], 70.0, aggregate=mean_plddt)[0] == [rec]
    assert structure_filter([rec], 70.0, aggregate=min_plddt)[1] == [rec]


def test_filter_validates_threshold():
    with pytest.raises(ValueError):
        structure_filter([], -1.0)
    with pytest.raises(ValueError):
        structure_filter([], 100.5)
