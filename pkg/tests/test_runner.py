import json
import re
from collections import defaultdict

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import outcome
from lecflex.runner import (PAYLOAD_KEYS, MalformedRecordError, Message, PayloadKindError, VersionMismatchError,
                            allocation_header, decode_message, encode_message, render_reports, write_reports)
from lecflex.runner.cli import main
from lecflex.scenarios import bundled_path, load_bundled

DEVICE_VARS = ("soc", "p_ch", "p_dis", "temperature", "u1", "boiler", "bes1", "bes2", "hp1", "hp2", "chp1",
               "dr1", "dr2", "sb2")


# wire format

def _signal(**kw):
    payload = {"lec": "LEC2", "pcc": 2, "hours": [12], "prices": [0.942], "directions": [-1], "deviation_cap": 0.25}
    payload.update(kw)
    return Message("FlexSignal", "dso", 3, payload)


def test_flex_signal_round_trip():
    msg = _signal()
    line = encode_message(msg)
    assert "\n" not in line
    assert line.startswith("LFX1\tFlexSignal\tdso\t3\t")
    body = json.loads(line.split("\t")[4])
    assert body["hours"] == [12] and body["pcc"] == 2 and body["prices"] == [0.942]
    assert decode_message(line) == msg
    assert decode_message(line + "\n") == msg


def test_truncated_record():
    line = encode_message(_signal())
    with pytest.raises(MalformedRecordError, match="malformed record"):
        decode_message(line[: len(line) // 2])
    with pytest.raises(MalformedRecordError, match="malformed record"):
        decode_message("LFX1\tFlexSignal\tdso")


def test_version_mismatch():
    line = encode_message(_signal()).replace("LFX1", "LFX2", 1)
    with pytest.raises(VersionMismatchError):
        decode_message(line)


def test_payload_kind_errors():
    with pytest.raises(PayloadKindError):
        decode_message(encode_message(_signal()).replace("FlexSignal", "Gossip", 1))
    with pytest.raises(PayloadKindError):
        _signal(soc=[0.5])
    with pytest.raises(PayloadKindError):
        Message("FlexBid", "LEC1", 1, {"lec": "LEC1"})


def test_floats_keep_type():
    msg = Message("SettlementNotice", "dso", 0, {"lec": "A", "revenue": 2.0, "cost_delta": 1e-20})
    back = decode_message(encode_message(msg))
    assert isinstance(back.payload["revenue"], float) and back.payload["cost_delta"] == 1e-20


_floats = st.floats(allow_nan=False, allow_infinity=False, width=64)
_names = st.text(st.characters(min_codepoint=32, max_codepoint=0x2FF), max_size=8)


@st.composite
def _messages(draw):
    kind = draw(st.sampled_from(sorted(PAYLOAD_KEYS)))
    value = st.one_of(_floats, st.integers(-10**6, 10**6), st.lists(_floats, max_size=5),
                      st.dictionaries(_names, _floats, max_size=3))
    payload = {k: draw(value) for k in PAYLOAD_KEYS[kind]}
    payload["lec"] = draw(_names)
    return Message(kind, draw(st.sampled_from(["dso", "LEC1", "x y"])), draw(st.integers(0, 500)), payload)


@settings(max_examples=1000, deadline=None)
@given(_messages())
def test_random_messages_round_trip(msg):
    line = encode_message(msg)
    back = decode_message(line)
    assert back == msg
    assert encode_message(back) == line


# privacy

def test_lec_traffic_carries_pcc_aggregates_only(case1_outcome):
    sent = [line for line in case1_outcome.messages if line.split("\t")[2] != "dso"]
    assert sent
    horizon = case1_outcome.scenario.horizon
    for line in sent:
        msg = decode_message(line)
        assert msg.kind in ("BaselineSubmission", "FlexBid", "CommitmentSubmission")
        body = line.split("\t")[4]
        for name in DEVICE_VARS:
            assert not re.search(rf'"{name}\b', body), (name, msg.kind)
        for key in ("p", "q", "flexibility"):
            if key in msg.payload:
                assert len(msg.payload[key]) == horizon


# transports and determinism

@pytest.mark.parametrize("name", ["case1", "case2"])
def test_socket_matches_in_process(name):
    a, b = outcome(name), outcome(name, "socket")
    assert render_reports(a) == render_reports(b)
    # log order follows delivery; content must match
    assert sorted(a.messages) == sorted(b.messages)


def test_repeated_runs_identical(tmp_path, case1_outcome):
    from lecflex.runner import run_scenario

    again = run_scenario(load_bundled("case1"))
    first = write_reports(case1_outcome, tmp_path / "a")
    second = write_reports(again, tmp_path / "b")
    assert sorted(first) == sorted(second)
    for name in first:
        assert first[name].read_bytes() == second[name].read_bytes()
    third = write_reports(case1_outcome, tmp_path / "c")
    assert all(third[n].read_bytes() == first[n].read_bytes() for n in first)


# reports

def test_allocation_header_golden(case1_outcome):
    expected = ("hour,offered_LEC1,offered_LEC2,cleared_LEC1,cleared_LEC2,requirement_kw,price_LEC1,price_LEC2,"
                "direction_LEC1,direction_LEC2,shedding_kw")
    assert ",".join(allocation_header(["LEC2", "LEC1"])) == expected
    assert render_reports(case1_outcome)["allocation.csv"].splitlines()[0] == expected


@pytest.mark.parametrize("name", ["case1", "case2", "rebound"])
def test_trace_row_count(name):
    out = outcome(name)
    pccs = len(out.scenario.network.pcc_buses())
    per_iter = defaultdict(set)
    for line in out.messages:
        msg = decode_message(line)
        if msg.kind == "FlexSignal":
            per_iter[msg.iteration].add(tuple(msg.payload["hours"]))
    expected = sum(len(next(iter(h))) * pccs for h in per_iter.values())
    assert all(len(h) == 1 for h in per_iter.values())
    lines = render_reports(out)["trace.csv"].splitlines()
    assert len(lines) - 1 == len(out.trace) == expected


def test_settlement_shape(case1_outcome):
    lines = render_reports(case1_outcome)["settlement.csv"].splitlines()
    assert lines[0] == "capital_flow,dso,LEC1,LEC2,energy_retailer,heat_retailer"
    assert [l.split(",")[0] for l in lines[1:]] == ["operational_cost_increase", "income_increase", "revenue"]


def test_unwritable_directory(tmp_path, case1_outcome):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        write_reports(case1_outcome, blocker / "sub")


def test_uncongested_run():
    from dataclasses import replace

    from lecflex.runner import run_scenario

    s = load_bundled("case1")
    net = s.network
    roomy = replace(net, branches=tuple(replace(b, rating=1e5) for b in net.branches))
    out = run_scenario(replace(s, network=roomy, name="roomy"))
    assert out.converged and out.iterations == 0 and out.exit_code == 0
    st_ = out.settlement
    assert st_.dso_cost == 0.0 and all(v == 0.0 for v in st_.lec_revenue.values())
    assert render_reports(out)["allocation.csv"].count("\n") == 1


# CLI

def test_cli_run(tmp_path, capsys):
    assert main(["run", "--scenario", "case1", "--out", str(tmp_path / "r")]) == 0
    assert "converged=True" in capsys.readouterr().out
    assert (tmp_path / "r" / "allocation.csv").exists()


def test_cli_budget_exhaustion_sheds(capsys):
    # one round is not enough; the allocation covers the gap with shedding
    assert main(["run", "--scenario", "case1", "--max-iter", "1"]) == 2
    assert "shedding_kw=0 " not in capsys.readouterr().out


def test_cli_errors(tmp_path, capsys):
    assert main(["run", "--scenario", str(tmp_path / "missing.yaml")]) == 1
    assert "does not exist" in capsys.readouterr().err
    bad = tmp_path / "bad.yaml"
    bad.write_text("network: [\n")
    assert main(["validate", "--scenario", str(bad)]) == 1


def test_cli_validate_and_powerflow(capsys):
    assert main(["validate", "--scenario", str(bundled_path("case1"))]) == 0
    assert capsys.readouterr().out.startswith("ok: ")
    assert main(["powerflow", "--scenario", "case1", "--hour", "18"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("hour,element,id,") and "congested=True" in out
    assert main(["powerflow", "--scenario", "case1", "--hour", "99"]) == 1


def test_rebound_left_unresolved_not_converged():
    from dataclasses import replace

    from lecflex.runner import run_scenario

    s = load_bundled("rebound")
    out = run_scenario(replace(s, market=replace(s.market, rebound_rounds=0)))
    assert not out.rebound.ok and not out.converged and out.exit_code == 3
