//! Property tests pitting the analytic fluid-transfer solver against a
//! millisecond-discretized brute-force integrator, plus conservation
//! properties of the trace arithmetic.

use hassim_core::netmodel::BandwidthTrace;
use proptest::prelude::*;

/// Brute-force reference: march 1 ms slots (clipped at breakpoints so a slot
/// never straddles a rate change), accumulating rate * dt until the size is
/// delivered. Independent of the analytic breakpoint walk.
fn brute_force_finish(trace: &BandwidthTrace, start_s: f64, size_kbits: f64) -> Option<f64> {
    const STEP_S: f64 = 1e-3;
    let mut t = start_s;
    let mut delivered = 0.0;
    loop {
        if t >= trace.horizon_s() {
            return None;
        }
        let rate = trace.bandwidth_at(t).unwrap();
        let step_end = trace
            .samples()
            .iter()
            .map(|&(bp, _)| bp)
            .find(|&bp| bp > t)
            .unwrap_or(trace.horizon_s());
        let slot_end = (t + STEP_S).min(step_end);
        delivered += rate * (slot_end - t);
        if delivered >= size_kbits {
            return Some(slot_end);
        }
        t = slot_end;
    }
}

/// Random piecewise trace: up to ten steps with rates in [100, 10000] kbps
/// (and an occasional dead step), plus a generous tail.
fn arb_trace() -> impl Strategy<Value = BandwidthTrace> {
    prop::collection::vec(
        (0.5f64..20.0, 100.0f64..10_000.0, prop::bool::weighted(0.1)),
        1..10,
    )
    .prop_map(|steps| {
        let mut samples = Vec::new();
        let mut t = 0.0;
        for (dt, rate, dead) in steps {
            samples.push((t, if dead { 0.0 } else { rate }));
            t += dt;
        }
        // Ample tail so transfers always finish.
        samples.push((t, 5_000.0));
        BandwidthTrace::new(samples, t + 500.0).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analytic_finish_matches_brute_force(
        trace in arb_trace(),
        start_frac in 0.0f64..0.9,
        size_frac in 0.05f64..0.9,
    ) {
        let start = start_frac * 20.0;
        let available = trace.integral_kbits(start, trace.horizon_s() - 1.0).unwrap();
        let size = (size_frac * available).max(1_000.0);

        let analytic = trace.transfer_finish_time(start, size).unwrap();
        let brute = brute_force_finish(&trace, start, size).unwrap();
        let elapsed = analytic - start;
        prop_assert!(elapsed > 0.0);
        prop_assert!(
            (analytic - brute).abs() <= (1e-3 * elapsed).max(2e-3),
            "analytic {analytic} vs brute {brute} (elapsed {elapsed})"
        );
    }

    #[test]
    fn average_times_width_equals_integral(
        trace in arb_trace(),
        a in 0.0f64..30.0,
        b in 0.0f64..30.0,
    ) {
        let (t0, t1) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(t1 - t0 > 1e-6);
        let avg = trace.average_bandwidth(t0, t1).unwrap();
        let integral = trace.integral_kbits(t0, t1).unwrap();
        prop_assert!((avg * (t1 - t0) - integral).abs() <= 1e-9 * integral.max(1.0));
    }

    #[test]
    fn transfer_of_windowed_integral_finishes_at_window_end(
        trace in arb_trace(),
        a in 0.0f64..25.0,
        width in 0.5f64..30.0,
    ) {
        let t0 = a;
        let t1 = a + width;
        let size = trace.integral_kbits(t0, t1).unwrap();
        prop_assume!(size > 0.0);
        // If the window ends inside a dead step the earliest finish is at
        // the step's start, not the window end; restrict to live endpoints.
        prop_assume!(trace.bandwidth_at(t1 - 1e-9).unwrap() > 0.0);
        let finish = trace.transfer_finish_time(t0, size).unwrap();
        prop_assert!((finish - t1).abs() < 1e-9, "finish {finish} vs {t1}");
    }

    #[test]
    fn lookup_is_constant_between_breakpoints(trace in arb_trace(), t in 0.0f64..40.0) {
        let bw = trace.bandwidth_at(t).unwrap();
        // Nudge within the same step: value must not change.
        let idx = trace
            .samples()
            .partition_point(|&(start, _)| start <= t) - 1;
        let step_end = trace
            .samples()
            .get(idx + 1)
            .map_or(trace.horizon_s(), |&(start, _)| start);
        let probe = (t + (step_end - t) * 0.5).min(step_end - 1e-9);
        if probe > t {
            prop_assert_eq!(trace.bandwidth_at(probe).unwrap(), bw);
        }
    }
}
