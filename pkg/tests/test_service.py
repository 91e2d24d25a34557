import json
import math
import time

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from tandemlift.cli import main
from tandemlift.config import default_scenario
from tandemlift.service import (CommandMessage, LiveForceSource, ReplayService,
                                SimulationService, create_app, error_frame,
                                frame_from_record, parse_command)
from tandemlift.sim import export_log, run_scenario

FRAME_KEYS = {"v", "t", "state", "ref", "S", "U", "force", "gated"}


class TestCommandParsing:
    def test_valid_apply_force(self):
        cmd = parse_command('{"kind": "apply_force", "force": [2, 0, 0], '
                            '"client": "ui", "ts": 1.5}')
        assert cmd.kind == "apply_force"
        assert np.array_equal(cmd.force, [2, 0, 0])

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown command kind"):
            parse_command('{"kind": "warp"}')

    def test_malformed_json_rejected(self):
        with pytest.raises(ValueError, match="malformed JSON"):
            parse_command("{nope")

    def test_apply_force_requires_finite_vector(self):
        with pytest.raises(ValueError):
            parse_command('{"kind": "apply_force"}')
        with pytest.raises(ValueError):
            parse_command('{"kind": "apply_force", "force": [1, 2]}')

    def test_simple_kinds(self):
        for kind in ("clear_force", "pause", "resume", "reset"):
            assert parse_command(json.dumps({"kind": kind})).kind == kind


class TestFrames:
    def test_frame_fields_and_version(self):
        res = run_scenario(default_scenario(duration=0.002, dt=1e-3))
        frame = frame_from_record(res.log.records[0])
        assert set(frame.keys()) == FRAME_KEYS
        assert frame["v"] == 1
        assert set(frame["state"].keys()) == {"x", "y", "z", "vx", "vy", "vz",
                                              "phi", "theta", "psi", "p", "q", "r"}
        assert set(frame["ref"].keys()) == {"xd", "yd", "zd", "phid", "thetad", "psid"}
        assert len(frame["S"]) == 6 and len(frame["U"]) == 4 and len(frame["force"]) == 3

    def test_error_frame_carries_version(self):
        f = error_frame("nope")
        assert f["v"] == 1 and f["error"] == "nope"


class TestLiveForceSource:
    def test_hold_timeout_in_sim_time(self):
        src = LiveForceSource(hold_timeout=2.0)
        src.apply(np.array([1.0, 0, 0]), t=10.0)
        assert np.array_equal(src.sample(11.9), [1, 0, 0])
        assert np.array_equal(src.sample(12.1), [0, 0, 0])

    def test_clear(self):
        src = LiveForceSource()
        src.apply(np.array([1.0, 0, 0]), t=0.0)
        src.clear()
        assert np.array_equal(src.sample(0.1), [0, 0, 0])


def finished_service(duration=0.3, decimate=10, commands=(), cfg=None):
    """Run a service to completion without wall-clock pacing."""
    cfg = cfg or default_scenario(duration=duration)
    service = SimulationService(cfg, decimate=decimate, realtime=False)
    for cmd in commands:
        service.submit(cmd)
    service.start()
    service._thread.join(timeout=30.0)
    assert service.result is not None
    return service


class TestSimulationService:
    def test_command_reflected_within_two_steps(self):
        cmd = CommandMessage(kind="apply_force", force=np.array([2.0, 0, 0]))
        service = finished_service(duration=0.05, commands=[cmd])
        log = service.result.log
        fx = log.column("Fx")
        # queued before start: the force is live from the first drained step
        assert np.any(fx[:2] == 2.0)

    def test_hold_timeout_two_seconds_sim_time(self):
        cmd = CommandMessage(kind="apply_force", force=np.array([2.0, 0, 0]))
        service = finished_service(duration=2.5, commands=[cmd])
        fx = service.result.log.column("Fx")
        t = service.result.log.times()
        assert np.all(fx[t <= 1.99] == 2.0)
        assert np.all(fx[t > 2.01] == 0.0)

    def test_velocity_trends_toward_force_over_damping(self):
        # with the gate passed, the reference velocity approaches F/C and the
        # vehicle follows: after one admittance time constant vx is well on
        # its way toward 2/1.6 = 1.25 m/s
        cmd = CommandMessage(kind="apply_force", force=np.array([2.0, 0, 0]))
        service = finished_service(duration=2.0, commands=[cmd])
        log = service.result.log
        t = log.times()
        vx = log.column("vx")
        tau = 1.0 / 1.6
        target = 2.0 / 1.6
        idx = np.searchsorted(t, tau)
        assert vx[idx] > target * 0.5
        assert abs(vx[-1]) <= target * 1.05

    def test_decimated_frames_at_or_above_30hz_of_sim_time(self):
        frames = []
        cfg = default_scenario(duration=0.5)
        service = SimulationService(cfg, decimate=20, realtime=False)
        cid, q = service.hub.register()
        service.start()
        service._thread.join(timeout=30.0)
        while not q.empty():
            frames.append(q.get())
        # one frame per 20 ms of simulated time = 50 Hz
        assert len(frames) >= math.floor(0.5 / (20 * 1e-3))
        dts = np.diff([f["t"] for f in frames])
        assert np.allclose(dts, 0.02)
        assert 1.0 / np.max(dts) >= 30.0

    def test_reset_restarts_scenario(self):
        cfg = default_scenario(duration=0.2)
        service = SimulationService(cfg, decimate=5, realtime=False)
        cid, q = service.hub.register()
        service.submit(CommandMessage(kind="apply_force", force=np.array([2.0, 0, 0])))
        service.submit(CommandMessage(kind="reset"))
        service.start()
        service._thread.join(timeout=30.0)
        times = [f["t"] for f in list(q.queue)]
        # the reset re-ran the scenario from t = 0
        assert times.count(0.0) >= 1
        assert service.result.summary["steps"] == 201


class TestWebSocketEndpoint:
    def test_config_frame_then_telemetry(self):
        cfg = default_scenario(duration=0.1)
        service = SimulationService(cfg, decimate=10, realtime=False)
        app = create_app(service)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                hello = json.loads(ws.receive_text())
                assert hello["v"] == 1
                assert hello["config"]["threshold"] == 0.5
                assert hello["config"]["mode"] == "live"
                service.start()
                frame = json.loads(ws.receive_text())
                assert set(frame.keys()) == FRAME_KEYS
        service.stop()

    def test_malformed_message_gets_error_frame_connection_kept(self):
        cfg = default_scenario(duration=0.1)
        service = SimulationService(cfg, decimate=10, realtime=False)
        app = create_app(service)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                ws.receive_text()  # config
                ws.send_text("not json")
                reply = json.loads(ws.receive_text())
                assert "error" in reply and "malformed" in reply["error"]
                ws.send_text('{"kind": "warp"}')
                reply = json.loads(ws.receive_text())
                assert "error" in reply
                # still alive: a valid command is accepted silently
                ws.send_text('{"kind": "pause"}')
                service.start()
                time.sleep(0.1)
                assert service._pause.is_set()
                ws.send_text('{"kind": "resume"}')
        service.stop()

    def test_two_clients_receive_identical_sequences(self):
        cfg = default_scenario(duration=0.2)
        service = SimulationService(cfg, decimate=10, realtime=False)
        app = create_app(service)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws1, \
                 client.websocket_connect("/ws") as ws2:
                ws1.receive_text()
                ws2.receive_text()
                service.start()
                service._thread.join(timeout=30.0)
                n = 201 // 10 + 1
                seq1 = [ws1.receive_text() for _ in range(n)]
                seq2 = [ws2.receive_text() for _ in range(n)]
                assert seq1 == seq2
        service.stop()

    def test_pause_resume_keeps_time_continuous(self):
        cfg = default_scenario(duration=0.2)
        service = SimulationService(cfg, decimate=1, realtime=False)
        cid, q = service.hub.register()
        service.submit(CommandMessage(kind="pause"))
        service.start()
        time.sleep(0.2)
        assert service._pause.is_set()
        service.submit(CommandMessage(kind="resume"))
        service._thread.join(timeout=30.0)
        times = [f["t"] for f in list(q.queue)]
        diffs = np.diff(times)
        assert np.allclose(diffs, 1e-3)
        service.stop()


class TestReplayService:
    @pytest.fixture()
    def small_log(self, tmp_path):
        res = run_scenario(default_scenario(duration=1.0, dt=1e-2))
        path = tmp_path / "log.csv"
        export_log(res.log, str(path))
        return res.log, str(path)

    def test_frames_match_log_records(self, small_log):
        log, _ = small_log
        service = ReplayService(log, speed=100.0)
        cid, q = service.hub.register()
        service.start()
        service._thread.join(timeout=30.0)
        frames = list(q.queue)
        assert len(frames) == len(log)
        for frame, rec in zip(frames, log.records):
            assert frame == frame_from_record(rec)

    def test_speed_scales_wall_duration(self, small_log):
        log, _ = small_log
        service = ReplayService(log, speed=2.0)
        cid, q = service.hub.register()
        start = time.monotonic()
        service.start()
        service._thread.join(timeout=30.0)
        elapsed = time.monotonic() - start
        assert elapsed == pytest.approx(0.5, rel=0.05)

    def test_commands_rejected_in_replay(self, small_log):
        log, _ = small_log
        service = ReplayService(log, speed=1000.0)
        app = create_app(service)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                hello = json.loads(ws.receive_text())
                assert hello["config"]["mode"] == "replay"
                ws.send_text('{"kind": "apply_force", "force": [1, 0, 0]}')
                reply = json.loads(ws.receive_text())
                assert "replay mode" in reply["error"]


class TestCli:
    def test_run_writes_csv_and_summary(self, tmp_path):
        runner = CliRunner()
        out = tmp_path / "run.csv"
        summ = tmp_path / "run.json"
        result = runner.invoke(main, ["run", "scenarios/hover.yaml",
                                      "--dt", "0.002",
                                      "--out", str(out), "--summary", str(summ)])
        assert result.exit_code == 0, result.output
        assert out.exists()
        doc = json.loads(summ.read_text())
        assert doc["dt"] == 0.002
        assert doc["final_position_error"] < 1e-3
        assert doc["aborted"] is None

    def test_malformed_scenario_exit_2_with_key_path(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("system:\n  m_i: -1\n")
        runner = CliRunner()
        result = runner.invoke(main, ["run", str(bad)])
        assert result.exit_code == 2
        assert "system" in result.output

    def test_unknown_key_exit_2(self, tmp_path):
        bad = tmp_path / "bad2.yaml"
        bad.write_text("controller:\n  zeta: 1.0\n")
        runner = CliRunner()
        result = runner.invoke(main, ["run", str(bad)])
        assert result.exit_code == 2
        assert "controller.zeta" in result.output

    def test_aborting_run_nonzero_exit(self, tmp_path):
        bad = tmp_path / "tumble.yaml"
        bad.write_text(
            "sim:\n  duration: 2.0\n  dt: 1.0e-3\n"
            "  initial: {p: [0, 0, 1], angles: [1.3, 0, 0], omega: [40, 0, 0]}\n")
        runner = CliRunner()
        result = runner.invoke(main, ["run", str(bad)])
        assert result.exit_code == 3
        assert "aborted" in result.output
