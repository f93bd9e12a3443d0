//! Central finite-difference checks of every tape operation in 64-bit mode.

use hsan_core::autodiff::{grad_check, ClosureLoss, ParamStore, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-3;
const TOL: f64 = 1e-4;
const SEEDS: u64 = 10;

/// Uniform values kept at least `gap` away from zero, so relu inputs never
/// straddle the kink under an `EPS` perturbation.
fn values(rng: &mut ChaCha8Rng, n: usize, gap: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let v: f64 = rng.gen_range(gap..1.0);
            if rng.gen_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect()
}

/// Scalarizes `build` with a fixed random linear functional and runs the
/// checker for `SEEDS` random inputs of the given shapes.
fn check<B>(name: &str, shapes: &[(usize, usize)], build: B)
where
    B: Fn(&mut Tape<'_, f64>, &[Var]) -> Var,
{
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        for (i, &(r, c)) in shapes.iter().enumerate() {
            params
                .add(format!("x{i}"), Tensor::from_rows(r, c, values(&mut rng, r * c, 0.05)))
                .unwrap();
        }
        let probe_seed = seed + 1000;
        let forward = |p: &ParamStore<f64>| {
            let mut tape = Tape::train(p, ChaCha8Rng::seed_from_u64(seed));
            let inputs: Vec<Var> = p.ids().map(|id| tape.param(id)).collect();
            let out = build(&mut tape, &inputs);
            let t = tape.value(out);
            let mut r = ChaCha8Rng::seed_from_u64(probe_seed);
            let w = Tensor::new(t.shape().to_vec(), values(&mut r, t.len(), 0.1)).unwrap();
            let wv = tape.constant(w);
            let prod = tape.mul(out, wv);
            let loss = tape.sum(prod);
            (tape.value(loss).data()[0], tape.backward(loss))
        };
        let loss = ClosureLoss {
            value: |p: &ParamStore<f64>| forward(p).0,
            value_and_grad: forward,
        };
        let report = grad_check(&loss, &params, EPS, TOL).unwrap();
        assert!(
            report.passed(),
            "{name} seed {seed}: max rel error {}",
            report.max_rel_error()
        );
    }
}

#[test]
fn matmul() {
    check("matmul", &[(3, 4), (4, 2)], |t, x| t.matmul(x[0], x[1]));
}

#[test]
fn matmul_bt() {
    check("matmul_bt", &[(3, 4), (5, 4)], |t, x| t.matmul_bt(x[0], x[1]));
}

#[test]
fn add_and_mul() {
    check("add", &[(2, 3), (2, 3)], |t, x| t.add(x[0], x[1]));
    check("mul", &[(2, 3), (2, 3)], |t, x| t.mul(x[0], x[1]));
    check("mul self", &[(2, 3)], |t, x| t.mul(x[0], x[0]));
}

#[test]
fn add_row_and_scale() {
    check("add_row", &[(3, 4), (1, 4)], |t, x| t.add_row(x[0], x[1]));
    check("scale", &[(3, 2)], |t, x| t.scale(x[0], -1.7));
}

#[test]
fn activations() {
    check("sigmoid", &[(3, 3)], |t, x| t.sigmoid(x[0]));
    check("tanh", &[(3, 3)], |t, x| t.tanh(x[0]));
    check("relu", &[(3, 3)], |t, x| t.relu(x[0]));
}

#[test]
fn concat_and_slice() {
    check("concat_cols", &[(2, 3), (2, 1)], |t, x| t.concat_cols(&[x[0], x[1], x[0]]));
    check("concat_rows", &[(2, 3), (1, 3)], |t, x| t.concat_rows(&[x[1], x[0]]));
    check("slice_cols", &[(3, 5)], |t, x| t.slice_cols(x[0], 1, 4));
    check("row", &[(3, 5)], |t, x| t.row(x[0], 2));
}

#[test]
fn masked_softmax() {
    check("softmax rows", &[(3, 4)], |t, x| {
        t.masked_softmax(x[0], 1, Some(&[true, false, true, true])).unwrap()
    });
    check("softmax cols", &[(3, 4)], |t, x| t.masked_softmax(x[0], 0, None).unwrap());
}

#[test]
fn masked_row_mean() {
    check("row mean", &[(4, 3)], |t, x| {
        t.masked_row_mean(x[0], &[true, false, true, true])
    });
}

#[test]
fn unfold_and_block_max() {
    check("unfold", &[(6, 2)], |t, x| t.unfold(x[0], 3, 2));
    check("block_max", &[(6, 2)], |t, x| t.block_max(x[0], 3));
}

#[test]
fn scatter_and_gather() {
    check("scatter_rows", &[(2, 3)], |t, x| t.scatter_rows(x[0], &[3, 0], 4));
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let id = params
            .add("table", Tensor::from_rows(4, 3, values(&mut rng, 12, 0.05)))
            .unwrap();
        let weights = values(&mut rng, 9, 0.1);
        let forward = |p: &ParamStore<f64>| {
            let mut tape = Tape::eval(p);
            let g = tape.gather(id, &[2, 0, 2]);
            let w = tape.constant(Tensor::from_rows(3, 3, weights.clone()));
            let prod = tape.mul(g, w);
            let loss = tape.sum(prod);
            (tape.value(loss).data()[0], tape.backward(loss))
        };
        let loss = ClosureLoss {
            value: |p: &ParamStore<f64>| forward(p).0,
            value_and_grad: forward,
        };
        assert!(grad_check(&loss, &params, EPS, TOL).unwrap().passed());
    }
}

#[test]
fn dropout_with_fixed_mask() {
    check("dropout", &[(4, 4)], |t, x| t.dropout(x[0], 0.3));
}

#[test]
fn cross_entropy() {
    check("neg_log_at", &[(1, 5)], |t, x| {
        let p = t.masked_softmax(x[0], 1, None).unwrap();
        t.neg_log_at(p, 3)
    });
    check("sum", &[(2, 2)], |t, x| t.sum(x[0]));
}
