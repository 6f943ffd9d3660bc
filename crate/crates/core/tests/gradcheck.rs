//! Reverse-mode gradients against central finite differences.

use alerta_core::data::MovementLabel;
use alerta_core::model::{AlertaNet, ModelConfig, ModelKind, MOVEMENT_W};
use alerta_core::numerics::{Matrix, ParamStore, Tape, Var};
use alerta_core::train::{batch_objective, joint_loss};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-6;
const REL_TOL: f64 = 1e-5;
const ABS_FLOOR: f64 = 1e-8;

fn close(analytic: f64, numeric: f64) -> bool {
    let scale = analytic.abs().max(numeric.abs());
    (analytic - numeric).abs() <= (REL_TOL * scale).max(ABS_FLOOR)
}

/// Perturb every entry of every parameter and compare.
fn check_all(store: &mut ParamStore, mut loss: impl FnMut(&ParamStore) -> f64, analytic: &ParamStore) -> usize {
    let mut checked = 0;
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        for k in 0..store.value(id).data().len() {
            let orig = store.value(id).data()[k];
            store.value_mut(id).data_mut()[k] = orig + STEP;
            let up = loss(store);
            store.value_mut(id).data_mut()[k] = orig - STEP;
            let down = loss(store);
            store.value_mut(id).data_mut()[k] = orig;
            let numeric = (up - down) / (2.0 * STEP);
            let a = analytic.grad(id).data()[k];
            assert!(
                close(a, numeric),
                "{}[{k}]: analytic {a:e} vs numeric {numeric:e}",
                store.name(id)
            );
            checked += 1;
        }
    }
    checked
}

fn random_net(rng: &mut ChaCha8Rng, d: usize, u: usize, t: usize, kind: ModelKind, separate: bool) -> AlertaNet {
    let mut cfg = ModelConfig::new(d, u, t);
    cfg.kind = kind;
    cfg.separate_context_cell = separate;
    let mut net = AlertaNet::init(cfg, rng.gen()).unwrap();
    // nonzero biases too
    let ids: Vec<_> = net.params.ids().collect();
    for id in ids {
        for v in net.params.value_mut(id).data_mut() {
            *v += rng.gen_range(-0.3..0.3);
        }
    }
    net
}

fn labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<(MovementLabel, bool)> {
    (0..n)
        .map(|_| {
            let m = match rng.gen_range(0..3) {
                0 => MovementLabel::Up,
                1 => MovementLabel::Down,
                _ => MovementLabel::Abstain,
            };
            (m, rng.gen_bool(0.3))
        })
        .collect()
}

#[test]
fn small_model_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (d, u, t) = (4, 3, 5);
    for (kind, separate) in [(ModelKind::Alerta, false), (ModelKind::Alerta, true), (ModelKind::Gru, false)] {
        let mut net = random_net(&mut rng, d, u, t, kind, separate);
        let xs: Vec<Matrix> = (0..3)
            .map(|_| Matrix::from_fn(d, t, |_, _| rng.gen_range(-2.0..2.0)))
            .collect();
        let refs: Vec<&Matrix> = xs.iter().collect();
        let ys = labels(&mut rng, 3);
        let lambda = 0.7;
        batch_objective(&mut net, &refs, &ys, lambda, 2.5).unwrap();
        let analytic = net.params.clone();
        let config = net.config.clone();
        let checked = check_all(
            &mut net.params,
            |p| {
                let mut probe = AlertaNet {
                    config: config.clone(),
                    params: p.clone(),
                };
                batch_objective(&mut probe, &refs, &ys, lambda, 2.5).unwrap()
            },
            &analytic,
        );
        assert_eq!(checked, analytic.num_scalars());
    }
}

#[test]
fn tda_normalized_variant_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut net = random_net(&mut rng, 3, 2, 6, ModelKind::Alerta, false);
    net.config.tda_normalize = true;
    let x = Matrix::from_fn(3, 6, |_, _| rng.gen_range(-1.0..1.0));
    let ys = [(MovementLabel::Down, true)];
    batch_objective(&mut net, &[&x], &ys, 1.0, 1.0).unwrap();
    let analytic = net.params.clone();
    let config = net.config.clone();
    check_all(
        &mut net.params,
        |p| {
            let mut probe = AlertaNet {
                config: config.clone(),
                params: p.clone(),
            };
            batch_objective(&mut probe, &[&x], &ys, 1.0, 1.0).unwrap()
        },
        &analytic,
    );
}

#[test]
fn batch_objective_is_mean_of_per_sample_losses() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut net = random_net(&mut rng, 3, 4, 4, ModelKind::Alerta, false);
    let xs: Vec<Matrix> = (0..5)
        .map(|_| Matrix::from_fn(3, 4, |_, _| rng.gen_range(-2.0..2.0)))
        .collect();
    let refs: Vec<&Matrix> = xs.iter().collect();
    let ys = labels(&mut rng, 5);
    let batched = batch_objective(&mut net, &refs, &ys, 0.4, 1.0).unwrap();
    let mean = xs
        .iter()
        .zip(&ys)
        .map(|(x, &(m, v))| joint_loss(&net.forward(x).unwrap(), m, v, 0.4))
        .sum::<f64>()
        / 5.0;
    assert!((batched - mean).abs() < 1e-12, "{batched} vs {mean}");
}

#[test]
fn volatility_loss_reaches_movement_head() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut net = random_net(&mut rng, 3, 3, 4, ModelKind::Alerta, false);
    let x = Matrix::from_fn(3, 4, |_, _| rng.gen_range(-1.0..1.0));
    // abstaining movement label: only the volatility term is active
    batch_objective(&mut net, &[&x], &[(MovementLabel::Abstain, true)], 1.0, 1.0).unwrap();
    let g = net.params.grad(net.params.id(MOVEMENT_W).unwrap());
    assert!(g.data().iter().any(|&v| v != 0.0));
}

// Random compositions of the tape's primitive ops.

#[derive(Debug, Clone)]
enum Step {
    MatMulW,
    AddSelf,
    SubOther,
    MulSelf,
    Sigmoid,
    Tanh,
    OneMinus,
    Scale(f64),
    AddBias,
}

fn step_strategy() -> impl Strategy<Value = Step> {
    prop_oneof![
        Just(Step::MatMulW),
        Just(Step::AddSelf),
        Just(Step::SubOther),
        Just(Step::MulSelf),
        Just(Step::Sigmoid),
        Just(Step::Tanh),
        Just(Step::OneMinus),
        (-2.0f64..2.0).prop_map(Step::Scale),
        Just(Step::AddBias),
    ]
}

fn run_program(store: &ParamStore, x: &Matrix, program: &[Step], tape: &mut Tape) -> Var {
    let w = tape.param(store, store.id("w").unwrap());
    let b = tape.param(store, store.id("b").unwrap());
    let other = tape.param(store, store.id("other").unwrap());
    let mut cur = tape.constant(x.clone());
    for s in program {
        cur = match s {
            Step::MatMulW => tape.matmul(w, cur).unwrap(),
            Step::AddSelf => tape.add(cur, cur).unwrap(),
            Step::SubOther => tape.sub(cur, other).unwrap(),
            Step::MulSelf => {
                let t = tape.tanh(cur).unwrap();
                tape.mul(cur, t).unwrap()
            }
            Step::Sigmoid => tape.sigmoid(cur).unwrap(),
            Step::Tanh => tape.tanh(cur).unwrap(),
            Step::OneMinus => tape.one_minus(cur).unwrap(),
            Step::Scale(c) => tape.scale(cur, *c).unwrap(),
            Step::AddBias => tape.add_column(cur, b).unwrap(),
        };
    }
    let stacked = tape.vstack(&[cur, other]).unwrap();
    let s = tape.sigmoid(stacked).unwrap();
    let targets = Matrix::from_fn(6, 2, |i, j| ((i + j) % 2) as f64);
    let weights = Matrix::filled(6, 2, 0.5);
    let bce = tape.bce_with_logits_sum(stacked, targets, weights).unwrap();
    let total = tape.sum(s).unwrap();
    tape.add(total, bce).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn arbitrary_compositions_match_finite_differences(
        program in prop::collection::vec(step_strategy(), 1..8),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let mut rand_m = |r, c| Matrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0));
        store.insert("w", rand_m(3, 3)).unwrap();
        store.insert("b", rand_m(3, 1)).unwrap();
        store.insert("other", rand_m(3, 2)).unwrap();
        store.insert("unused", rand_m(2, 2)).unwrap();
        let x = rand_m(3, 2);

        let mut tape = Tape::new();
        let loss = run_program(&store, &x, &program, &mut tape);
        tape.backward(loss, &mut store).unwrap();
        let analytic = store.clone();
        prop_assert!(analytic.get("unused").is_ok());
        let unused = analytic.id("unused").unwrap();
        prop_assert!(analytic.grad(unused).data().iter().all(|&g| g == 0.0));

        check_all(
            &mut store,
            |p| {
                let mut t = Tape::new();
                let l = run_program(p, &x, &program, &mut t);
                t.value(l).get(0, 0)
            },
            &analytic,
        );
    }
}
