//! Minimal neural-network stack: tensors, layers with hand-written backward
//! passes, losses, optimizers and a finite-difference gradient checker.

mod attention;
mod dense;
mod dropout;
mod gradcheck;
mod loss;
mod lstm;
mod optim;
mod pool;
mod tensor;

pub use attention::{attention_pool, AttentionCache, AttentionPool};
pub use dense::{dense_forward, Dense};
pub use dropout::{dropout, dropout_seeded, Mode};
pub use gradcheck::{grad_check, relative_error, GradCheckReport};
pub use loss::{softmax, softmax_xent};
pub use lstm::{bilstm_forward, BiLstm, BiLstmCache, LstmCell, LstmTrace};
pub use optim::{clip_grad_norm, optimizer_step, OptimizerKind, OptimizerState, TrainConfig};
pub use pool::{
    adaptive_avg_pool, adaptive_avg_pool_backward, adaptive_segment, global_avg_pool, global_avg_pool_backward,
};
pub use tensor::{Parameters, Tensor2};
pub(crate) use tensor::prefixed;

#[cfg(test)]
mod gradient_tests {
    //! Every backward pass against central differences.

    use super::*;
    use crate::rng::SplitMix64;

    /// Fixed random projection of an output so the scalar loss depends on
    /// every output element.
    fn probe(rows: usize, cols: usize, seed: u64) -> Tensor2 {
        Tensor2::uniform(rows, cols, 1.0, &mut SplitMix64::new(seed))
    }

    fn weighted_sum(out: &Tensor2, probe: &Tensor2) -> f64 {
        out.data.iter().zip(&probe.data).map(|(a, b)| a * b).sum()
    }

    #[derive(Clone)]
    struct DenseWithInput {
        layer: Dense,
        x: Tensor2,
    }

    impl Parameters for DenseWithInput {
        fn tensors(&self) -> Vec<(String, &Tensor2)> {
            let mut v = self.layer.tensors();
            v.push(("x".into(), &self.x));
            v
        }
        fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
            let mut v = self.layer.tensors_mut();
            v.push(&mut self.x);
            v
        }
    }

    #[test]
    fn dense_gradients() {
        let mut rng = SplitMix64::new(21);
        let mut m = DenseWithInput {
            layer: Dense::new(5, 3, &mut rng),
            x: Tensor2::uniform(4, 5, 1.0, &mut rng),
        };
        let p = probe(4, 3, 1);
        let y = m.layer.forward(&m.x).unwrap();
        let _ = weighted_sum(&y, &p);
        let mut g = DenseWithInput {
            layer: Dense::zeros(5, 3),
            x: Tensor2::zeros(4, 5),
        };
        g.x = m.layer.backward(&m.x, &p, &mut g.layer);
        let report = grad_check(&mut m, &g, 1, |m| weighted_sum(&m.layer.forward(&m.x).unwrap(), &p));
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    #[derive(Clone)]
    struct LstmWithInput {
        layer: BiLstm,
        x: Tensor2,
    }

    impl Parameters for LstmWithInput {
        fn tensors(&self) -> Vec<(String, &Tensor2)> {
            let mut v = self.layer.tensors();
            v.push(("x".into(), &self.x));
            v
        }
        fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
            let mut v = self.layer.tensors_mut();
            v.push(&mut self.x);
            v
        }
    }

    fn check_bilstm(input: usize, hidden: usize, steps: usize, len: usize, seed: u64) -> f64 {
        let mut rng = SplitMix64::new(seed);
        let mut m = LstmWithInput {
            layer: BiLstm::new(input, hidden, &mut rng),
            x: Tensor2::uniform(steps, input, 1.0, &mut rng),
        };
        let p = probe(steps, 2 * hidden, seed + 1);
        let (_, cache) = m.layer.forward(&m.x, len).unwrap();
        let mut g = LstmWithInput {
            layer: BiLstm::zeros(input, hidden),
            x: Tensor2::zeros(steps, input),
        };
        g.x = m.layer.backward(&m.x, &cache, &p, &mut g.layer);
        grad_check(&mut m, &g, 1, |m| {
            weighted_sum(&m.layer.forward(&m.x, len).unwrap().0, &p)
        })
        .max_rel_error
    }

    #[test]
    fn bilstm_gradients() {
        assert!(check_bilstm(2, 3, 4, 4, 5) < 1e-3);
        // padded tail
        assert!(check_bilstm(3, 2, 5, 3, 6) < 1e-3);
    }

    #[derive(Clone)]
    struct AttentionWithInput {
        layer: AttentionPool,
        states: Tensor2,
    }

    impl Parameters for AttentionWithInput {
        fn tensors(&self) -> Vec<(String, &Tensor2)> {
            let mut v = self.layer.tensors();
            v.push(("states".into(), &self.states));
            v
        }
        fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
            let mut v = self.layer.tensors_mut();
            v.push(&mut self.states);
            v
        }
    }

    #[test]
    fn attention_gradients() {
        let mut rng = SplitMix64::new(8);
        let mut m = AttentionWithInput {
            layer: AttentionPool::new(4, &mut rng),
            states: Tensor2::uniform(5, 4, 1.5, &mut rng),
        };
        let p = probe(1, 4, 3);
        let (_, cache) = m.layer.forward(&m.states, 4).unwrap();
        let mut g = AttentionWithInput {
            layer: AttentionPool::zeros(4),
            states: Tensor2::zeros(5, 4),
        };
        g.states = m.layer.backward(&m.states, &cache, &p.data, &mut g.layer);
        let report = grad_check(&mut m, &g, 1, |m| {
            let (ctx, _) = m.layer.forward(&m.states, 4).unwrap();
            ctx.iter().zip(&p.data).map(|(a, b)| a * b).sum()
        });
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    #[derive(Clone)]
    struct Input(Tensor2);

    impl Parameters for Input {
        fn tensors(&self) -> Vec<(String, &Tensor2)> {
            vec![("x".into(), &self.0)]
        }
        fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
            vec![&mut self.0]
        }
    }

    #[test]
    fn pooling_gradients() {
        let mut rng = SplitMix64::new(13);
        for (t, target) in [(5, 3), (7, 2), (2, 4), (6, 6)] {
            let mut x = Input(Tensor2::uniform(t, 3, 1.0, &mut rng));
            let p = probe(target, 3, t as u64);
            let g = Input(adaptive_avg_pool_backward(&p, t));
            let r = grad_check(&mut x, &g, 1, |x| weighted_sum(&adaptive_avg_pool(&x.0, target).unwrap(), &p));
            assert!(r.max_rel_error < 1e-6, "{t}->{target}: {r:?}");
        }
        let mut x = Input(Tensor2::uniform(6, 3, 1.0, &mut rng));
        let p = vec![0.3, -1.0, 0.7];
        let g = Input(global_avg_pool_backward(&p, 4, 6));
        let r = grad_check(&mut x, &g, 1, |x| {
            global_avg_pool(&x.0, 4).unwrap().iter().zip(&p).map(|(a, b)| a * b).sum()
        });
        assert!(r.max_rel_error < 1e-6);
    }

    #[test]
    fn gradient_checker_detects_wrong_gradients() {
        let mut x = Input(Tensor2::from_vec(1, 2, vec![1.0, 2.0]).unwrap());
        let wrong = Input(Tensor2::from_vec(1, 2, vec![2.0, 5.0]).unwrap());
        let r = grad_check(&mut x, &wrong, 1, |x| x.0.norm_sq());
        // true gradient is [2, 4]
        assert!(r.max_rel_error > 0.1);
        assert_eq!(r.worst, Some(("x".to_string(), 1)));
    }
}
