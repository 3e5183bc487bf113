use asep_lab::{
    init_asep_step, init_colored_step, init_two_species, make_window, Color, Configuration, Mode,
    ModelParams, Outcome, RngStream, SimState, Window,
};

fn lone_particle(window: Window, p: f64) -> SimState {
    let cfg = Configuration::from_fn(window, false, |x| if x == 0 { Color(1) } else { Color::EMPTY }).unwrap();
    SimState::new(cfg, ModelParams::new(p, 0).unwrap(), Mode::Single).unwrap()
}

#[test]
fn two_site_absorption() {
    let window = Window::new(0, 1).unwrap();
    let n = 100_000u64;
    let hits = (0..n)
        .filter(|&i| {
            let mut s = lone_particle(window, 1.0);
            s.run_until(1.0, &mut RngStream::new(11, i)).unwrap();
            s.config().is_occupied(1)
        })
        .count();
    let phat = hits as f64 / n as f64;
    let exact = 1.0 - (-1.0f64).exp();
    let se = (exact * (1.0 - exact) / n as f64).sqrt();
    assert!((phat - exact).abs() < 4.0 * se, "phat {phat} exact {exact}");
}

/// `exp(Q t)` by scaling and squaring of a Taylor series.
fn expm(q: &[[f64; 3]; 3], t: f64) -> [[f64; 3]; 3] {
    let mul = |a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]| {
        let mut c = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        c
    };
    let squarings = 10;
    let h = t / f64::from(1 << squarings);
    let a: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| q[i][j] * h));
    let mut term = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut sum = term;
    for k in 1..30 {
        term = mul(&term, &a).map(|row| row.map(|x| x / f64::from(k)));
        for i in 0..3 {
            for j in 0..3 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = mul(&sum, &sum);
    }
    sum
}

#[test]
fn three_site_chain_matches_generator() {
    // States 110, 101, 011 on sites 0..=2; jumps off the window are dropped.
    let (p, t) = (0.7, 1.5);
    let q = 1.0 - p;
    let gen = [[-p, p, 0.0], [q, -1.0, p], [0.0, q, -q]];
    let exact = expm(&gen, t)[0];
    assert!((exact.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    let window = Window::new(0, 2).unwrap();
    let params = ModelParams::new(p, 0).unwrap();
    let n = 100_000u64;
    let mut counts = [0u64; 3];
    for i in 0..n {
        let cfg = Configuration::from_fn(window, false, |x| if x < 2 { Color(1) } else { Color::EMPTY }).unwrap();
        let mut s = SimState::new(cfg, params, Mode::Single).unwrap();
        s.run_until(t, &mut RngStream::new(5, i)).unwrap();
        let c = s.config();
        let state = match (c.is_occupied(0), c.is_occupied(1), c.is_occupied(2)) {
            (true, true, false) => 0,
            (true, false, true) => 1,
            (false, true, true) => 2,
            other => panic!("impossible state {other:?}"),
        };
        counts[state] += 1;
    }
    for k in 0..3 {
        let phat = counts[k] as f64 / n as f64;
        let se = (exact[k] * (1.0 - exact[k]) / n as f64).sqrt();
        assert!((phat - exact[k]).abs() < 4.0 * se, "state {k}: {phat} vs {}", exact[k]);
    }
}

#[test]
fn lone_particle_drift() {
    let (p, t, n) = (0.7, 50.0, 10_000u64);
    let window = make_window(t, 0, 5.0);
    let speeds: Vec<f64> = (0..n)
        .map(|i| {
            let mut s = lone_particle(window, p);
            s.run_until(t, &mut RngStream::new(3, i)).unwrap();
            s.config().particle_site(0) as f64 / t
        })
        .collect();
    let mean = speeds.iter().sum::<f64>() / n as f64;
    let var = speeds.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    assert!((mean - (2.0 * p - 1.0)).abs() < 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn window_contains_the_dynamics() {
    let (t, l) = (10.0, 2);
    let params = ModelParams::new(0.7, l).unwrap();
    let window = make_window(t, l, 5.0);
    let (lo, hi) = (window.lo() + 10, window.hi() - 10);
    for i in 0..1000 {
        let mut s = SimState::new(init_two_species(&params, window).unwrap(), params, Mode::TwoSpecies).unwrap();
        s.run_until_with(t, &mut RngStream::new(8, i), |ev, out, _| {
            if out.accepted() {
                assert!(ev.site.min(ev.target()) >= lo && ev.site.max(ev.target()) <= hi, "trial {i}: {ev:?}");
            }
        })
        .unwrap();
    }
}

#[test]
fn colors_and_order_conserved() {
    let window = make_window(20.0, 0, 2.0);
    let params = ModelParams::new(0.6, 0).unwrap();
    for seed in 0..20 {
        let mut s = SimState::new(init_colored_step(window).unwrap(), params, Mode::Colored).unwrap();
        let before = s.config().count_by_color();
        let mut last_time = 0.0;
        s.run_until_with(20.0, &mut RngStream::new(seed, 0), |ev, out, cfg| {
            assert!(ev.time > last_time);
            last_time = ev.time;
            if let Outcome::Swapped { mover, displaced, .. } = out {
                assert!(displaced < mover);
            }
            assert_eq!(cfg.particle_count(), before.len());
        })
        .unwrap();
        s.config().audit().unwrap();
        assert_eq!(s.config().count_by_color(), before);

        // Single species: particles never pass each other, so the
        // k-th particle from the right stays the k-th.
        let mut single = SimState::new(init_asep_step(window).unwrap(), params, Mode::Single).unwrap();
        let n = single.config().particle_count();
        single.run_until(20.0, &mut RngStream::new(seed, 1)).unwrap();
        single.config().audit().unwrap();
        assert_eq!(single.config().particle_count(), n);
    }
}

#[test]
fn fast_loop_matches_event_stepping() {
    let params = ModelParams::new(0.7, 1).unwrap();
    let window = make_window(30.0, 1, 2.0);
    for seed in 0..10 {
        let init = init_two_species(&params, window).unwrap();
        let mut fast = SimState::new(init.clone(), params, Mode::TwoSpecies).unwrap();
        let mut slow = SimState::new(init, params, Mode::TwoSpecies).unwrap();
        let mut a = RngStream::new(seed, 4);
        let mut b = a.clone();
        let stats = fast.run_until(30.0, &mut a).unwrap();
        let mut events = 0;
        loop {
            let mut ev = slow.next_event(&mut b).unwrap();
            if ev.time > 30.0 {
                break;
            }
            slow.apply_event(&mut ev).unwrap();
            events += 1;
        }
        assert_eq!(stats.events, events);
        assert_eq!(fast.config(), slow.config());
        assert_eq!(a, b);
    }
}
