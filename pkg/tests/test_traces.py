"""Log schema round-trips, the rate map, kinematics, and trace synthesis."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qoskit.errors import DomainError, EmptyTraceError, TraceParseError
from qoskit.traces import (
    LOG_HEADER,
    MobilityScenario,
    QosLogRow,
    RateDistanceMap,
    default_rate_map,
    default_speed_profile,
    parse_log,
    parse_scenario,
    rate_at_distance,
    speed_at,
    synth_mobility_trace,
    write_log,
)


def _row(t=1_700_000_000, **overrides):
    fields = dict(
        t_unix_s=t, lat_deg=0.01, lon_deg=0.02, integrity=1, dist_m=1000.0,
        speed_kmh=50.0, tput_Bps=230_000.0, jitter_ms=4.5, lost_pkts=10,
        total_pkts=100,
    )
    fields.update(overrides)
    return QosLogRow(**fields)


class TestLogRows:
    def test_lost_cannot_exceed_total(self):
        with pytest.raises(DomainError):
            _row(lost_pkts=5, total_pkts=3)

    def test_negative_fields_rejected(self):
        with pytest.raises(DomainError):
            _row(tput_Bps=-1.0)
        with pytest.raises(DomainError):
            _row(jitter_ms=-0.5)


class TestLogRoundTrip:
    def test_empty_list_is_header_only(self):
        assert write_log([]) == (LOG_HEADER + "\n").encode()

    def test_single_row_two_lines(self):
        data = write_log([_row()])
        assert data.decode().count("\n") == 2
        [row] = parse_log(data)
        assert row == _row()

    def test_well_formed_row_preserves_values(self):
        row = _row(lat_deg=43.1234567, tput_Bps=987654.0, jitter_ms=12.25)
        [back] = parse_log(write_log([row]))
        assert back == row

    def test_lost_exceeding_total_names_line(self):
        data = (
            LOG_HEADER + "\n"
            "1700000000,0,0,1,1000,50,230000,4.5,5,3\n"
        ).encode()
        with pytest.raises(TraceParseError, match="line 2"):
            parse_log(data)

    def test_malformed_field_names_line(self):
        good = write_log([_row()]).decode()
        bad = good + "1700000001,x,0,1,1000,50,230000,4.5,1,10\n"
        with pytest.raises(TraceParseError, match="line 3"):
            parse_log(bad)

    def test_non_monotone_timestamp_rejected(self):
        rows = [_row(t=100), _row(t=100)]
        with pytest.raises(DomainError, match=r"rows\[1\]"):
            write_log(rows)
        data = (
            LOG_HEADER + "\n"
            "100,0,0,1,1000,50,230000,4.5,1,10\n"
            "99,0,0,1,1000,50,230000,4.5,1,10\n"
        ).encode()
        with pytest.raises(TraceParseError, match="line 3"):
            parse_log(data)

    def test_wrong_header_rejected(self):
        with pytest.raises(TraceParseError, match="line 1"):
            parse_log(b"nope\n")

    @given(
        st.lists(
            st.tuples(
                st.integers(min_value=1, max_value=10_000),          # time gap
                st.floats(min_value=-89.0, max_value=89.0),          # lat
                st.floats(min_value=-179.0, max_value=179.0),        # lon
                st.integers(min_value=0, max_value=3),               # integrity
                st.floats(min_value=0, max_value=1e7),               # dist
                st.floats(min_value=0, max_value=300.0),             # speed
                st.floats(min_value=0, max_value=1e9),               # tput
                st.floats(min_value=0, max_value=1e5),               # jitter
                st.integers(min_value=0, max_value=10_000),          # delivered
                st.integers(min_value=0, max_value=10_000),          # extra lost
            ),
            max_size=40,
        )
    )
    @settings(max_examples=60)
    def test_canonical_files_round_trip_byte_for_byte(self, specs):
        """write(parse(f)) == f for any canonically written file."""
        rows = []
        t = 1_600_000_000
        for gap, lat, lon, integ, dist, speed, tput, jit, delivered, lost in specs:
            t += gap
            rows.append(
                QosLogRow(t, lat, lon, integ, dist, speed, tput, jit,
                          lost, lost + delivered)
            )
        canonical = write_log(rows)
        assert write_log(parse_log(canonical)) == canonical


class TestRateMap:
    def test_anchor_point_exact(self):
        m = default_rate_map()
        assert rate_at_distance(m, 540.0) == 1_000_000.0
        assert rate_at_distance(m, 1570.0) == 230_000.0

    def test_default_map_matches_coverage_classes(self):
        m = default_rate_map()
        assert rate_at_distance(m, 540.0) >= 800_000.0
        assert 200_000.0 <= rate_at_distance(m, 1570.0) <= 800_000.0

    def test_mask_zone_is_dead(self):
        m = RateDistanceMap(
            anchors=((540.0, 1e6), (2000.0, 0.0)),
            mask_zones=((900.0, 950.0),),
        )
        assert rate_at_distance(m, 925.0) == 0.0
        assert rate_at_distance(m, 899.9) > 0.0

    def test_zero_beyond_last_anchor(self):
        assert rate_at_distance(default_rate_map(), 2000.1) == 0.0

    def test_clamped_before_first_anchor(self):
        assert rate_at_distance(default_rate_map(), 10.0) == 1_000_000.0

    def test_linear_interpolation_between_anchors(self):
        m = default_rate_map()
        mid = rate_at_distance(m, (540.0 + 800.0) / 2)
        assert mid == pytest.approx((1_000_000.0 + 820_000.0) / 2)

    def test_step_interpolation(self):
        m = RateDistanceMap(anchors=((100.0, 10.0), (200.0, 5.0)), interpolation="step")
        assert rate_at_distance(m, 150.0) == 10.0

    def test_increasing_rates_rejected(self):
        with pytest.raises(DomainError):
            RateDistanceMap(anchors=((100.0, 10.0), (200.0, 20.0)))

    def test_negative_distance_rejected(self):
        with pytest.raises(DomainError):
            rate_at_distance(default_rate_map(), -1.0)


class TestSpeedProfile:
    def test_single_step_covers_everything(self):
        assert speed_at([(0, 50)], 0) == 50
        assert speed_at([(0, 50)], 1e6) == 50

    def test_step_boundaries(self):
        profile = [(0, 10), (100, 50)]
        assert speed_at(profile, 99) == 10
        assert speed_at(profile, 100) == 50

    def test_before_first_step_rejected(self):
        with pytest.raises(DomainError):
            speed_at([(10, 50)], 5)

    def test_default_profile_cycles_within_bounds(self):
        profile = default_speed_profile(3600)
        speeds = [speed_at(profile, t) for t in range(0, 3600, 30)]
        assert min(speeds) == 10.0
        assert max(speeds) == 50.0
        assert {10.0, 20.0, 30.0, 40.0, 50.0} == set(speeds)


class TestScenario:
    def test_zero_duration_is_empty_trace(self):
        scenario = MobilityScenario.static(1000.0, 0)
        with pytest.raises(EmptyTraceError):
            synth_mobility_trace(scenario)

    def test_bad_track_bounds(self):
        with pytest.raises(DomainError):
            MobilityScenario.constant_speed(50.0, 10, track_min_m=200.0, track_max_m=100.0)

    def test_parse_full_scenario(self):
        text = """
        # comment
        kind = constant_speed
        duration_s = 30
        speed_kmh = 40
        track_min_m = 500
        track_max_m = 1500
        seed = 9
        offered_Bps = 900000
        packet_size_B = 500
        buffer_pkts = 64
        rate_anchors = 500:900000, 1500:100000
        rate_interpolation = step
        mask_zones = 700-800
        """
        scenario = parse_scenario(text)
        assert scenario.kind == "constant_speed"
        assert scenario.duration_s == 30
        assert scenario.seed == 9
        assert scenario.packet_size_B == 500
        assert scenario.rate_map.interpolation == "step"
        assert scenario.rate_map.mask_zones == ((700.0, 800.0),)

    def test_parse_rejects_unknown_key(self):
        with pytest.raises(DomainError, match="unknown scenario key"):
            parse_scenario("kind = static\nduration_s = 5\nbogus = 1\n")

    def test_parse_rejects_duplicate_key(self):
        with pytest.raises(DomainError, match="duplicate"):
            parse_scenario("kind = static\nkind = static\nduration_s = 5\n")

    def test_parse_requires_kind_and_duration(self):
        with pytest.raises(DomainError):
            parse_scenario("kind = static\n")


class TestSynthesis:
    def test_deterministic_bytes(self):
        scenario = MobilityScenario.constant_speed(50.0, 60, seed=77)
        a = write_log(synth_mobility_trace(scenario))
        b = write_log(synth_mobility_trace(scenario))
        assert a == b

    def test_seed_changes_trace(self):
        rows_a = synth_mobility_trace(MobilityScenario.static(1000.0, 30, seed=1))
        rows_b = synth_mobility_trace(MobilityScenario.static(1000.0, 30, seed=2))
        assert rows_a != rows_b

    def test_one_row_per_second_and_parses_back(self):
        scenario = MobilityScenario.variable_speed(120, seed=5)
        rows = synth_mobility_trace(scenario)
        assert len(rows) == 120
        assert [r.t_unix_s for r in rows] == list(
            range(scenario.t0_unix_s, scenario.t0_unix_s + 120)
        )
        # every emitted row passes log validation, and the canonical bytes
        # are a fixed point of parse/write
        canonical = write_log(rows)
        assert write_log(parse_log(canonical)) == canonical

    def test_reflection_keeps_positions_in_bounds(self):
        scenario = MobilityScenario.constant_speed(
            120.0, 300, track_min_m=540.0, track_max_m=700.0, seed=3
        )
        rows = synth_mobility_trace(scenario)
        dists = [r.dist_m for r in rows]
        assert min(dists) >= 540.0
        assert max(dists) <= 700.0
        assert max(dists) > 650.0  # it does traverse the track

    def test_path_length_matches_speed_integral(self):
        """Total distance walked equals the per-second speed sum, up to one
        step of discretization slack per track reflection."""
        scenario = MobilityScenario.constant_speed(
            90.0, 240, track_min_m=540.0, track_max_m=740.0, seed=3
        )
        rows = synth_mobility_trace(scenario)
        dists = np.array([r.dist_m for r in rows])
        step = 90.0 / 3.6
        walked = np.abs(np.diff(dists)).sum()
        nominal = step * (len(rows) - 1)
        bounces = nominal / (740.0 - 540.0) + 1
        assert walked <= nominal + 1e-9
        assert walked >= nominal - 2 * step * bounces

    def test_static_point_in_mask_zone_loses_everything(self):
        scenario = MobilityScenario.static(
            925.0, 20, seed=5,
            rate_map=RateDistanceMap(
                anchors=((540.0, 1e6), (2000.0, 0.0)),
                mask_zones=((900.0, 950.0),),
            ),
        )
        rows = synth_mobility_trace(scenario)
        assert all(r.tput_Bps == 0.0 for r in rows)
        assert all(r.jitter_ms == 0.0 for r in rows)
        assert all(r.total_pkts > 0 for r in rows)
        assert all(r.lost_pkts == r.total_pkts for r in rows)

    def test_speed_column_follows_profile(self):
        rows = synth_mobility_trace(MobilityScenario.variable_speed(130, seed=4))
        assert rows[0].speed_kmh == 10.0
        assert rows[60].speed_kmh == 20.0
        assert rows[120].speed_kmh == 30.0

    @pytest.mark.parametrize("near,far", [(700.0, 1200.0), (800.0, 1570.0)])
    def test_farther_static_point_never_faster(self, near, far):
        """Monotone rate map: moving the static point out cannot raise the
        mean throughput (checked across 10 independent seeds)."""
        def mean_tput(dist, seed):
            rows = synth_mobility_trace(
                MobilityScenario.static(dist, 30, seed=seed)
            )
            return np.mean([r.tput_Bps for r in rows])

        for seed in range(10):
            assert mean_tput(far, seed) <= mean_tput(near, seed)
