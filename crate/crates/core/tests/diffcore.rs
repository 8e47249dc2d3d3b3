use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regretnet_core::diffcore::{eval_and_grad, AdamState, Bindings, Gradients, Graph, NodeId, ParamStore, Tensor};
use regretnet_core::Error;

fn random(shape: &[usize], rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Tensor {
    let len = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..len).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

fn scalar_of(g: &mut Graph, ev: &Bindings<'_>, out: NodeId) -> f64 {
    g.forward(ev, &[out]).unwrap().value(out).item().unwrap()
}

/// Builds `Σ w ⊙ op(inputs)` and checks every input gradient against central
/// differences. Returns the largest relative error.
fn fd_check(inputs: &[(&str, Tensor)], build: impl Fn(&mut Graph, &[NodeId]) -> NodeId, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::new();
    let ids: Vec<NodeId> = inputs.iter().map(|(n, _)| g.input(n)).collect();
    let y = build(&mut g, &ids);
    let probe = g.input("probe");
    let shape = {
        let mut b = Bindings::new();
        for (n, t) in inputs {
            b.bind(n, t);
        }
        g.forward(&b, &[y]).unwrap().value(y).shape().to_vec()
    };
    let weights = random(&shape, &mut rng, -1.0, 1.0);
    let prod = g.mul(y, probe);
    let out = g.sum(prod);
    let names: Vec<&str> = inputs.iter().map(|(n, _)| *n).collect();
    let mut b = Bindings::new().with("probe", &weights);
    for (n, t) in inputs {
        b.bind(n, t);
    }
    let (_, grads) = eval_and_grad(&g, out, &b, &names).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (k, (name, t)) in inputs.iter().enumerate() {
        let analytic = grads.get(name).unwrap();
        for idx in 0..t.len() {
            let eval_at = |delta: f64| {
                let mut moved = t.clone();
                moved.data_mut()[idx] += delta;
                let mut b = Bindings::new().with("probe", &weights);
                for (j, (n, other)) in inputs.iter().enumerate() {
                    if j != k {
                        b.bind(n, other);
                    }
                }
                b.bind(name, &moved);
                let mut g2 = g.clone();
                scalar_of(&mut g2, &b, out)
            };
            let fd = (eval_at(h) - eval_at(-h)) / (2.0 * h);
            let a = analytic.data()[idx];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-3);
            worst = worst.max(rel);
        }
    }
    worst
}

#[test]
fn identity_and_tanh_at_zero() {
    let mut g = Graph::new();
    let x = g.input("x");
    let t3 = Tensor::scalar(3.0);
    let (v, gr) = eval_and_grad(&g, x, &Bindings::new().with("x", &t3), &["x"]).unwrap();
    assert_eq!(v.item(), Some(3.0));
    assert_eq!(gr.get("x").unwrap().item(), Some(1.0));

    let y = g.tanh(x);
    let t0 = Tensor::scalar(0.0);
    let (v, gr) = eval_and_grad(&g, y, &Bindings::new().with("x", &t0), &["x"]).unwrap();
    assert_eq!(v.item(), Some(0.0));
    assert_eq!(gr.get("x").unwrap().item(), Some(1.0));
}

#[test]
fn two_layer_tanh_mlp_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let inputs = [
        ("x", random(&[5, 3], &mut rng, -1.0, 1.0)),
        ("w0", random(&[3, 6], &mut rng, -1.0, 1.0)),
        ("b0", random(&[6], &mut rng, -0.5, 0.5)),
        ("w1", random(&[6, 4], &mut rng, -1.0, 1.0)),
        ("b1", random(&[4], &mut rng, -0.5, 0.5)),
    ];
    let err = fd_check(
        &inputs,
        |g, ids| {
            let h = g.linear(ids[0], ids[1], ids[2]);
            let h = g.tanh(h);
            let o = g.linear(h, ids[3], ids[4]);
            g.tanh(o)
        },
        1,
    );
    assert!(err < 1e-5, "max relative error {err}");
}

type Builder = fn(&mut Graph, &[NodeId]) -> NodeId;

fn op_cases() -> Vec<(&'static str, Vec<Vec<usize>>, (f64, f64), Builder)> {
    vec![
        ("matmul", vec![vec![3, 4], vec![4, 2]], (-1.0, 1.0), |g, x| g.matmul(x[0], x[1])),
        ("add_broadcast", vec![vec![3, 4], vec![4]], (-1.0, 1.0), |g, x| g.add(x[0], x[1])),
        ("sub_broadcast", vec![vec![2, 3, 4], vec![3, 1]], (-1.0, 1.0), |g, x| g.sub(x[0], x[1])),
        ("mul", vec![vec![3, 4], vec![3, 4]], (-1.0, 1.0), |g, x| g.mul(x[0], x[1])),
        ("div", vec![vec![3, 4], vec![4]], (0.5, 2.0), |g, x| g.div(x[0], x[1])),
        ("minimum", vec![vec![3, 4], vec![3, 4]], (-1.0, 1.0), |g, x| g.minimum(x[0], x[1])),
        ("maximum", vec![vec![3, 4], vec![4]], (-1.0, 1.0), |g, x| g.maximum(x[0], x[1])),
        ("neg", vec![vec![5]], (-1.0, 1.0), |g, x| g.neg(x[0])),
        ("tanh", vec![vec![3, 4]], (-2.0, 2.0), |g, x| g.tanh(x[0])),
        ("sigmoid", vec![vec![3, 4]], (-3.0, 3.0), |g, x| g.sigmoid(x[0])),
        ("relu", vec![vec![3, 4]], (0.1, 1.0), |g, x| {
            let s = g.offset(x[0], -0.55);
            g.relu(s)
        }),
        ("exp", vec![vec![3, 4]], (-2.0, 2.0), |g, x| g.exp(x[0])),
        ("log", vec![vec![3, 4]], (0.2, 3.0), |g, x| g.log(x[0])),
        ("scale_offset", vec![vec![3, 4]], (-1.0, 1.0), |g, x| {
            let s = g.scale(x[0], -2.5);
            g.offset(s, 0.3)
        }),
        ("softmax_axis0", vec![vec![3, 4]], (-2.0, 2.0), |g, x| g.softmax(x[0], 0)),
        ("softmax_axis1", vec![vec![2, 3, 4]], (-2.0, 2.0), |g, x| g.softmax(x[0], 1)),
        ("sum_axis", vec![vec![2, 3, 4]], (-1.0, 1.0), |g, x| g.sum_axis(x[0], 1)),
        ("max_axis", vec![vec![3, 5]], (-1.0, 1.0), |g, x| g.max_axis(x[0], 1)),
        ("min_axis", vec![vec![3, 5]], (-1.0, 1.0), |g, x| g.min_axis(x[0], 0)),
        ("mean", vec![vec![3, 5]], (-1.0, 1.0), |g, x| g.mean(x[0], 15)),
        ("dot", vec![vec![6], vec![6]], (-1.0, 1.0), |g, x| g.dot(x[0], x[1])),
        ("reshape", vec![vec![2, 6]], (-1.0, 1.0), |g, x| {
            let r = g.reshape_rows(x[0], &[2, 3]);
            g.tanh(r)
        }),
        ("pad_slice", vec![vec![3, 4]], (-1.0, 1.0), |g, x| {
            let p = g.pad(x[0], 1, 0.0);
            let s = g.softmax(p, 1);
            g.slice(s, 1, 1, 3)
        }),
        ("concat", vec![vec![3, 2], vec![3, 4]], (-1.0, 1.0), |g, x| {
            let c = g.concat(&[x[0], x[1]], 1);
            g.tanh(c)
        }),
        ("gather", vec![vec![3, 4]], (-1.0, 1.0), |g, x| g.gather(x[0], vec![Some(2), None, Some(0), Some(2)], 1.0)),
    ]
}

#[test]
fn every_op_matches_finite_differences() {
    for (k, (name, shapes, (lo, hi), build)) in op_cases().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let names = ["a", "b", "c"];
        let inputs: Vec<(&str, Tensor)> =
            shapes.iter().enumerate().map(|(i, s)| (names[i], random(s, &mut rng, lo, hi))).collect();
        let err = fd_check(&inputs, build, k as u64);
        assert!(err < 1e-4, "{name}: max relative error {err}");
    }
}

#[test]
fn softmax_examples() {
    let run = |v: Vec<f64>| {
        let mut g = Graph::new();
        let x = g.input("x");
        let s = g.softmax(x, 0);
        let t = Tensor::vector(v);
        g.forward(&Bindings::new().with("x", &t), &[s]).unwrap().value(s).data().to_vec()
    };
    assert_eq!(run(vec![0.0, 0.0]), vec![0.5, 0.5]);
    let s = run(vec![1.0, 2.0, 3.0]);
    for (a, b) in s.iter().zip([0.09003057, 0.24472847, 0.66524096]) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-8);
    }
    let shifted = run(vec![1.0 + 37.5, 2.0 + 37.5, 3.0 + 37.5]);
    for (a, b) in s.iter().zip(&shifted) {
        assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
    }
}

proptest! {
    #[test]
    fn softmax_is_a_probability_vector(v in prop::collection::vec(-1e3f64..1e3, 1..12)) {
        let mut g = Graph::new();
        let x = g.input("x");
        let s = g.softmax(x, 0);
        let t = Tensor::vector(v);
        let ev = g.forward(&Bindings::new().with("x", &t), &[s]).unwrap();
        let out = ev.value(s).data();
        prop_assert!(out.iter().all(|p| *p >= 0.0 && p.is_finite()));
        prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_shift_invariance(v in prop::collection::vec(-5f64..5.0, 2..8), c in -50f64..50.0) {
        let mut g = Graph::new();
        let x = g.input("x");
        let s = g.softmax(x, 0);
        let a = Tensor::vector(v.clone());
        let b = Tensor::vector(v.iter().map(|x| x + c).collect());
        let pa = g.forward(&Bindings::new().with("x", &a), &[s]).unwrap().value(s).clone();
        let pb = g.forward(&Bindings::new().with("x", &b), &[s]).unwrap().value(s).clone();
        for (x, y) in pa.data().iter().zip(pb.data()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn evaluation_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random(&[64, 10], &mut rng, -1.0, 1.0);
    let w = random(&[10, 7], &mut rng, -1.0, 1.0);
    let mut g = Graph::new();
    let (xi, wi) = (g.input("x"), g.input("w"));
    let h = g.matmul(xi, wi);
    let h = g.tanh(h);
    let s = g.softmax(h, 1);
    let out = g.sum(s);
    let b = Bindings::new().with("x", &x).with("w", &w);
    let (v1, g1) = eval_and_grad(&g, out, &b, &["w"]).unwrap();
    let (v2, g2) = eval_and_grad(&g, out, &b, &["w"]).unwrap();
    assert_eq!(v1.item().unwrap().to_bits(), v2.item().unwrap().to_bits());
    let bits = |g: &Gradients| g.get("w").unwrap().data().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&g1), bits(&g2));
}

#[test]
fn shape_mismatch_names_the_node_and_unbound_errors() {
    let mut g = Graph::new();
    let a = g.input("a");
    let b = g.input("b");
    let m = g.matmul(a, b);
    let ta = Tensor::zeros(&[2, 3]);
    let tb = Tensor::zeros(&[4, 2]);
    let err = g.forward(&Bindings::new().with("a", &ta).with("b", &tb), &[m]).map(|_| ()).unwrap_err();
    match err {
        Error::Shape { op, .. } => assert_eq!(op, "matmul", "{err}"),
        other => panic!("unexpected {other:?}"),
    }
    let err = g.forward(&Bindings::new().with("a", &ta), &[m]).map(|_| ()).unwrap_err();
    assert!(matches!(err, Error::Unbound(ref n) if n == "b"), "{err:?}");
}

fn single_param(x: f64) -> ParamStore {
    let mut p = ParamStore::new();
    p.insert("x", Tensor::scalar(x));
    p
}

fn grad_of(x: f64) -> Gradients {
    let mut g = Gradients::default();
    g.insert("x".into(), Tensor::scalar(x));
    g
}

#[test]
fn adam_zero_gradient_and_first_step() {
    let mut adam = AdamState::new(0.01);
    let mut p = single_param(1.0);
    adam.step(&mut p, &grad_of(0.5)).unwrap();
    assert_abs_diff_eq!(p.get("x").unwrap().item().unwrap(), 1.0 - 0.01, epsilon = 1e-8);
    let (m_before, v_before) = adam.moments("x").map(|(m, v)| (m.item().unwrap(), v.item().unwrap())).unwrap();
    let before = p.get("x").unwrap().item().unwrap();
    let mut zero = AdamState::new(0.01);
    let mut q = single_param(before);
    zero.step(&mut q, &grad_of(0.0)).unwrap();
    assert_eq!(q.get("x").unwrap().item().unwrap(), before);
    adam.step(&mut p, &grad_of(0.0)).unwrap();
    let (m, v) = adam.moments("x").map(|(m, v)| (m.item().unwrap(), v.item().unwrap())).unwrap();
    assert_abs_diff_eq!(m, 0.9 * m_before, epsilon = 1e-15);
    assert_abs_diff_eq!(v, 0.999 * v_before, epsilon = 1e-15);
    assert_eq!(adam.steps(), 2);

    let mut neg = AdamState::new(0.01);
    let mut r = single_param(0.0);
    neg.step(&mut r, &grad_of(-3.0)).unwrap();
    assert_abs_diff_eq!(r.get("x").unwrap().item().unwrap(), 0.01, epsilon = 1e-8);
}

#[test]
fn adam_missing_gradient_errors() {
    let mut adam = AdamState::new(0.01);
    let mut p = single_param(1.0);
    let err = adam.step(&mut p, &Gradients::default()).unwrap_err();
    assert!(matches!(err, Error::MissingGradient(ref n) if n == "x"));
}

#[test]
fn adam_minimizes_quadratic() {
    let mut adam = AdamState::new(0.01);
    let mut p = single_param(0.0);
    for _ in 0..5000 {
        let x = p.get("x").unwrap().item().unwrap();
        adam.step(&mut p, &grad_of(2.0 * (x - 2.0))).unwrap();
    }
    assert!((p.get("x").unwrap().item().unwrap() - 2.0).abs() < 1e-3);
}
