//! Acceptance criteria 1-11, one PASS/FAIL line each.

use std::process::ExitCode;
use std::time::Instant;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ncrat::fock::{
    affiliated_rank_check, apply_chebyshev, chebyshev_vacuum_check, creation_antisymmetry_check,
    dual_system_check, expr_commutator_ranks, expr_to_series, fundamental_equality_check,
    operator_of_expr, shift_span_dimension, solve_on_vacuum, vacuum, EvalOptions, FockBasis,
};
use ncrat::hankel::{
    certify_finite_rank, classical_rank, classical_rationality, ClassicalHankel, ClassicalStatus,
};
use ncrat::linalg::QMatrix;
use ncrat::realize::{haagerup_check, haagerup_matrix_check, neumann_reconstruct};
use ncrat::scalar::{q, q_to_f64, qi};
use ncrat::wfa::{learn_from_hankel, learn_from_hankel_numeric};
use ncrat::word::{enumerate_words, words_of_length};
use ncrat::{Letter, LinearRepresentation, RationalExpr, Word, Q};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn l(i: u16) -> Letter {
    Letter::new(i)
}

fn expr(s: &str) -> RationalExpr {
    s.parse().expect("valid expression")
}

fn chebyshev_basis_identity() -> Check {
    let b = FockBasis::new(2, 8).map_err(|e| e.to_string())?;
    let words = enumerate_words(2, 8);
    let omega = vacuum::<Q>(&b).map_err(|e| e.to_string())?;
    for v in &words {
        ensure(
            chebyshev_vacuum_check(v, &b).map_err(|e| e.to_string())?,
            || format!("operator product: U_v Ω ≠ e_v at v = {v}"),
        )?;
        // vector recursion, independent of the operator products
        let y = apply_chebyshev(&b, v, &omega);
        let idx = b.index(v).expect("in range");
        let ok = y
            .iter()
            .enumerate()
            .all(|(k, x)| *x == if k == idx { qi(1) } else { qi(0) });
        ensure(ok, || format!("vector recursion: U_v Ω ≠ e_v at v = {v}"))?;
    }
    Ok(format!("{} words, two routes", words.len()))
}

fn dual_system() -> Check {
    let b = FockBasis::new(2, 8).map_err(|e| e.to_string())?;
    let mut n = 0;
    for i in 1..=2 {
        for j in 1..=2 {
            for k in 0..=5 {
                let ok = dual_system_check(l(i), l(j), k, &b).map_err(|e| e.to_string())?;
                ensure(ok, || format!("i={i} j={j} k={k}"))?;
                n += 1;
            }
        }
    }
    Ok(format!("{n} cases at N = 8"))
}

fn fundamental_equality() -> Check {
    let b = FockBasis::new(2, 7).map_err(|e| e.to_string())?;
    let mut pairs = 0;
    for v in enumerate_words(2, 7) {
        for i in 1..=2 {
            let ok = fundamental_equality_check(l(i), &v, &b).map_err(|e| e.to_string())?;
            ensure(ok, || format!("i={i} v={v}"))?;
            pairs += b.count_up_to(7 - v.len());
        }
    }
    Ok(format!("{pairs} (i, v, w) triples"))
}

fn classical_kronecker() -> Check {
    let poles = [q(1, 2), q(-1, 3), q(2, 5)];
    let weights = [qi(1), qi(-2), q(3, 2)];
    for k in 1..=3 {
        let coeffs: Vec<Q> = (0..21)
            .map(|n| (0..k).map(|p| weights[p].clone() * pow(&poles[p], n)).sum())
            .collect();
        let h = ClassicalHankel::new(&coeffs, 8).expect("enough coefficients");
        let rank = classical_rank(&h);
        ensure(rank == k, || format!("{k} poles: rank {rank}"))?;
        let a = classical_rationality(&coeffs).map_err(|e| e.to_string())?;
        ensure(
            a.status == ClassicalStatus::Stabilized && a.rank == k,
            || format!("{k} poles: analysis {a:?}"),
        )?;
        let mut expected: Vec<f64> = poles[..k].iter().map(|p| q_to_f64(p).abs()).collect();
        expected.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        let close = a
            .pole_moduli
            .iter()
            .zip(&expected)
            .all(|(x, y)| (x - y).abs() < 1e-9);
        ensure(close && a.pole_moduli.len() == k, || {
            format!(
                "{k} poles: moduli {:?}, expected {expected:?}",
                a.pole_moduli
            )
        })?;
    }
    let mut fact = qi(1);
    let inv_fact: Vec<Q> = (0..16)
        .map(|n| {
            if n > 0 {
                fact *= qi(n);
            }
            Q::one() / fact.clone()
        })
        .collect();
    for size in 1..=8 {
        let rank = classical_rank(&ClassicalHankel::new(&inv_fact, size).expect("enough"));
        ensure(rank == size, || format!("1/n!: rank {rank} at size {size}"))?;
    }
    Ok("ranks 1, 2, 3; 1/n! full rank to 8x8".into())
}

fn pow(x: &Q, n: usize) -> Q {
    (0..n).fold(Q::one(), |acc, _| acc * x.clone())
}

fn random_matrix(rng: &mut ChaCha8Rng, m: usize) -> QMatrix {
    (0..m)
        .map(|_| (0..m).map(|_| qi(rng.gen_range(-3..=3))).collect())
        .collect()
}

fn wfa_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut dims = [0usize; 5];
    for t in 0..100 {
        let m = rng.gen_range(1..=4);
        let lambda = (0..m).map(|_| qi(rng.gen_range(-3..=3))).collect();
        let gamma = (0..m).map(|_| qi(rng.gen_range(-3..=3))).collect();
        let mu = vec![random_matrix(&mut rng, m), random_matrix(&mut rng, m)];
        let r = LinearRepresentation::new(lambda, mu, gamma).map_err(|e| e.to_string())?;
        let z = r.tabulate(10);
        let learned = learn_from_hankel(&z, 4).map_err(|e| format!("trial {t}: {e}"))?;
        let back = learned.tabulate(10);
        let same = z.terms().all(|(w, c)| back.coeff(w) == *c)
            && back.terms().all(|(w, c)| z.coeff(w) == *c);
        ensure(same, || format!("trial {t}: coefficients differ"))?;
        let min = r.minimize().dim();
        ensure(learned.dim() == min, || {
            format!("trial {t}: learned {} vs minimized {min}", learned.dim())
        })?;
        dims[learned.dim()] += 1;
    }
    Ok(format!("100 representations, learned dims 0..4: {dims:?}"))
}

fn random_polynomial(rng: &mut ChaCha8Rng, letters: u16) -> RationalExpr {
    let mut e = RationalExpr::int(rng.gen_range(-3..=3));
    for _ in 0..rng.gen_range(1..=4) {
        let mut term = RationalExpr::int(rng.gen_range(1..=3) * if rng.gen() { 1 } else { -1 });
        for _ in 0..rng.gen_range(1..=4) {
            term = term * RationalExpr::s(rng.gen_range(1..=letters));
        }
        e = e + term;
    }
    e
}

fn forward_consistency() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let opts = EvalOptions::default();
    let mut ranks = Vec::new();
    for t in 0..50 {
        let a = random_polynomial(&mut rng, 2);
        let err = |e: &dyn std::fmt::Display| format!("trial {t} ({a}): {e}");
        let comm = expr_commutator_ranks(&a, 2, 10, 0.0, &opts).map_err(|e| err(&e))?;
        ensure(comm.iter().all(|c| c.stable), || err(&format!("{comm:?}")))?;
        let z = expr_to_series(&a, 2, 12, &opts).map_err(|e| err(&e))?;
        let cert = certify_finite_rank(&z.table, 5).map_err(|e| err(&e))?;
        ensure(cert.is_stabilized(), || err(&format!("{cert:?}")))?;
        let rank = cert.rank.expect("stabilized");
        let span = shift_span_dimension(&a, 2, 10).map_err(|e| err(&e))?;
        ensure(span.span_dim == rank, || {
            err(&format!(
                "shift span {} vs Hankel rank {rank}",
                span.span_dim
            ))
        })?;
        ranks.push(rank);
    }
    ranks.sort_unstable();
    Ok(format!(
        "50 polynomials, Hankel ranks {}..{}",
        ranks[0],
        ranks[ranks.len() - 1]
    ))
}

fn resolvent_coefficients(d: usize) -> Result<Vec<f64>, String> {
    let b = FockBasis::new(d, 30).map_err(|e| e.to_string())?;
    let sol = solve_on_vacuum(&expr("(5/2 - s1)^-1"), &b).map_err(|e| e.to_string())?;
    if d > 1 {
        let stray = sol
            .vector
            .terms()
            .find(|(w, c)| w.max_letter() > 1 && !c.is_zero());
        ensure(stray.is_none(), || {
            format!("non-zero coefficient off letter 1: {stray:?}")
        })?;
    }
    Ok((0..=10)
        .map(|n| q_to_f64(&sol.vector.coeff(&Word::power(l(1), n))))
        .collect())
}

fn resolvent_closed_form() -> Check {
    let mut worst: f64 = 0.0;
    for d in [1, 2] {
        for (n, x) in resolvent_coefficients(d)?.iter().enumerate() {
            let err = (x - 0.5f64.powi(n as i32 + 1)).abs();
            ensure(err < 1e-8, || format!("d={d} n={n}: error {err:e}"))?;
            worst = worst.max(err);
        }
    }
    Ok(format!("max error {worst:.1e} (N = 30, d = 1 and 2)"))
}

fn reconstruction() -> Check {
    let b = FockBasis::new(2, 30).map_err(|e| e.to_string())?;
    let sol = solve_on_vacuum(&expr("(5/2 - s1)^-1"), &b).map_err(|e| e.to_string())?;
    let z = sol.vector.to_series(10);
    let (r, fit) = learn_from_hankel_numeric(&z, 4, 1e-9).map_err(|e| e.to_string())?;
    ensure(r.dim() == 1, || format!("learned dimension {}", r.dim()))?;
    let basis = FockBasis::new(2, 12).map_err(|e| e.to_string())?;
    let rec = neumann_reconstruct(&r, &basis, 40, 1e-8).map_err(|e| e.to_string())?;
    let mut residual: f64 = 0.0;
    for v in enumerate_words(2, 12) {
        let truth = if v.max_letter() <= 1 {
            0.5f64.powi(v.len() as i32 + 1)
        } else {
            0.0
        };
        residual = residual.max((rec.vector.coeff(&v) - truth).abs());
    }
    let c = rec.report.c_prime;
    ensure(residual < 1e-6, || format!("residual {residual:e}"))?;
    ensure(rec.report.residual < 1e-6, || {
        format!("report residual {:e}", rec.report.residual)
    })?;
    ensure(c < 0.6, || format!("c' = {c}"))?;
    ensure(rec.report.converged, || {
        format!("tail {:e}", rec.report.tail_bound)
    })?;
    Ok(format!(
        "residual {residual:.1e}, c' = {c:.4}, tail {:.1e}, fit error {:.1e}",
        rec.report.tail_bound, fit.max_error
    ))
}

fn haagerup_bounds() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst_scalar, mut worst_matrix): (f64, f64) = (0.0, 0.0);
    for t in 0..200 {
        let d = rng.gen_range(1..=3);
        let m = rng.gen_range(0..=5);
        let words = words_of_length(d, m);
        let terms = rng.gen_range(1..=8).min(words.len());
        let mut alpha: Vec<(Word, Q)> = Vec::new();
        while alpha.len() < terms {
            let v = words[rng.gen_range(0..words.len())].clone();
            if alpha.iter().all(|(w, _)| *w != v) {
                let c = q(rng.gen_range(-5..=5), rng.gen_range(1..=4));
                alpha.push((v, if c.is_zero() { qi(1) } else { c }));
            }
        }
        let b = FockBasis::new(d, m + 4).map_err(|e| e.to_string())?;
        let s = haagerup_check(&alpha, &b).map_err(|e| e.to_string())?;
        let x = haagerup_matrix_check(&alpha, &b).map_err(|e| e.to_string())?;
        ensure(s.ok, || format!("trial {t}: scalar {s:?}"))?;
        ensure(x.ok, || format!("trial {t}: matrix {x:?}"))?;
        worst_scalar = worst_scalar.max(s.lhs / s.rhs);
        worst_matrix = worst_matrix.max(x.lhs / x.rhs);
    }
    Ok(format!(
        "200 families, max lhs/rhs {worst_scalar:.3} (scalar), {worst_matrix:.3} (matrix)"
    ))
}

fn antisymmetry() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let b = FockBasis::new(2, 8).map_err(|e| e.to_string())?;
    for t in 0..20 {
        let a = random_polynomial(&mut rng, 2);
        let op = operator_of_expr::<Q>(&b, &a).map_err(|e| e.to_string())?;
        for i in 1..=2 {
            let ok = creation_antisymmetry_check(l(i), &op).map_err(|e| e.to_string())?;
            ensure(ok, || format!("trial {t} ({a}), letter {i}"))?;
        }
    }
    Ok("20 polynomials, both letters".into())
}

fn affiliated() -> Check {
    let b = FockBasis::new(2, 8).map_err(|e| e.to_string())?;
    let (f, a, s1, one) = (
        expr("5/2 - s1"),
        expr("(5/2 - s1) * s1"),
        expr("s1"),
        expr("1"),
    );
    let r1 = affiliated_rank_check(&f, &a, &s1, &one, l(1), &b).map_err(|e| e.to_string())?;
    let r2 = affiliated_rank_check(&f, &a, &s1, &one, l(2), &b).map_err(|e| e.to_string())?;
    ensure(r1.rank == 1 && r2.rank == 0, || {
        format!("ranks {} and {}", r1.rank, r2.rank)
    })?;
    Ok("rank 1 for i = 1, 0 for i = 2".into())
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (
            "Chebyshev basis identity, |v| <= 8",
            chebyshev_basis_identity,
        ),
        ("dual system, k <= 5, N = 8", dual_system),
        (
            "commutator action on U_v, |v| + |w| <= 7",
            fundamental_equality,
        ),
        ("one-variable Kronecker ranks", classical_kronecker),
        ("representation round trip", wfa_round_trip),
        (
            "polynomial commutator ranks vs Hankel rank",
            forward_consistency,
        ),
        ("resolvent coefficients", resolvent_closed_form),
        ("Neumann reconstruction", reconstruction),
        ("Haagerup bounds", haagerup_bounds),
        ("creation/annihilation antisymmetry", antisymmetry),
        ("affiliated operator rank", affiliated),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = check();
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!(
                "criterion {:>2}: PASS  {name}: {detail} [{secs:.1}s]",
                k + 1
            ),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name}: {why} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
