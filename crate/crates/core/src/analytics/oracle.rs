//! Brute-force counterparts of the closed forms.

use rand::Rng;

/// Probability that a walk started `k` steps behind closes the gap before
/// falling `rho` behind, when the leader extends with probability
/// `phi / (1 + phi)` per block.
pub fn gamblers_ruin_closed_form(phi: f64, rho: u32, k: u32) -> f64 {
    if (phi - 1.0).abs() < 1e-12 {
        return (rho - k) as f64 / rho as f64;
    }
    (1.0 - phi.powi((rho - k) as i32)) / (1.0 - phi.powi(rho as i32))
}

/// Same probability by propagating mass over the states `0..=rho` until the
/// transient mass is negligible. Shares no algebra with the closed form.
pub fn gamblers_ruin_oracle(phi: f64, rho: u32, k: u32) -> f64 {
    assert!(phi > 0.0 && k <= rho, "need phi > 0 and k <= rho");
    if k == 0 {
        return 1.0;
    }
    if k == rho {
        return 0.0;
    }
    let up = phi / (1.0 + phi);
    let down = 1.0 - up;
    let n = rho as usize;
    let mut mass = vec![0.0f64; n + 1];
    mass[k as usize] = 1.0;
    let mut absorbed_success = 0.0;
    let mut next = vec![0.0f64; n + 1];
    loop {
        next.iter_mut().for_each(|x| *x = 0.0);
        for s in 1..n {
            let m = mass[s];
            if m == 0.0 {
                continue;
            }
            next[s - 1] += m * down;
            next[s + 1] += m * up;
        }
        absorbed_success += next[0];
        next[0] = 0.0;
        next[n] = 0.0;
        std::mem::swap(&mut mass, &mut next);
        let transient: f64 = mass.iter().sum();
        if transient < 1e-16 {
            break;
        }
    }
    absorbed_success
}

/// Monte Carlo estimate of [`gamblers_ruin_closed_form`].
pub fn gamblers_ruin_monte_carlo<R: Rng + ?Sized>(
    rng: &mut R,
    phi: f64,
    rho: u32,
    k: u32,
    trials: u64,
) -> f64 {
    let up = phi / (1.0 + phi);
    let mut wins = 0u64;
    for _ in 0..trials {
        let mut lead = k;
        while lead != 0 && lead != rho {
            if rng.random::<f64>() < up {
                lead += 1;
            } else {
                lead -= 1;
            }
        }
        if lead == 0 {
            wins += 1;
        }
    }
    wins as f64 / trials as f64
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "no sign change on the bracket");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn edge_states() {
        assert_eq!(gamblers_ruin_oracle(0.8, 6, 0), 1.0);
        assert_eq!(gamblers_ruin_oracle(0.8, 6, 6), 0.0);
        assert!((gamblers_ruin_oracle(1.0, 6, 2) - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_matches_closed_form() {
        for i in 1..=18 {
            let phi = 0.05 * i as f64 + 0.05;
            for rho in 2..=12 {
                for k in 0..=rho {
                    let a = gamblers_ruin_oracle(phi, rho, k);
                    let b = gamblers_ruin_closed_form(phi, rho, k);
                    assert!(
                        (a - b).abs() < 1e-9,
                        "phi={phi} rho={rho} k={k}: {a} vs {b}"
                    );
                }
            }
        }
        assert!((gamblers_ruin_closed_form(0.8, 6, 2) - 0.8002).abs() < 1e-4);
    }

    #[test]
    fn monte_carlo_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let est = gamblers_ruin_monte_carlo(&mut rng, 0.8, 6, 2, 20_000);
        assert!((est - 0.8002).abs() < 0.015);
    }
}
