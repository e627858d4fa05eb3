//! Parameter storage, initialization, and uniform tensor traversal.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::ModelConfig;
use super::scalar::Scalar;

const INIT_STD: f64 = 0.02;

#[derive(Clone, Debug, PartialEq)]
pub struct Linear<T> {
    /// (in, out)
    pub weight: Array2<T>,
    /// (out,)
    pub bias: Array1<T>,
}

impl<T: Scalar> Linear<T> {
    fn zeros(inp: usize, out: usize) -> Self {
        Linear {
            weight: Array2::zeros((inp, out)),
            bias: Array1::zeros(out),
        }
    }

    /// `x (L,in) -> x W + b (L,out)`
    pub fn forward(&self, x: &Array2<T>) -> Array2<T> {
        x.dot(&self.weight) + &self.bias
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerNormParams<T> {
    pub gain: Array1<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> LayerNormParams<T> {
    fn identity(dim: usize) -> Self {
        LayerNormParams {
            gain: Array1::ones(dim),
            bias: Array1::zeros(dim),
        }
    }

    fn zeros(dim: usize) -> Self {
        LayerNormParams {
            gain: Array1::zeros(dim),
            bias: Array1::zeros(dim),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams<T> {
    pub query: Linear<T>,
    pub key: Linear<T>,
    pub value: Linear<T>,
    pub output: Linear<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderLayerParams<T> {
    pub attn: AttentionParams<T>,
    pub attn_ln: LayerNormParams<T>,
    pub ff1: Linear<T>,
    pub ff2: Linear<T>,
    pub ff_ln: LayerNormParams<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairHeadParams<T> {
    pub dense: Linear<T>,
    pub out: Linear<T>,
}

/// Every learned tensor of the model. Shapes are fully determined by the
/// [`ModelConfig`] that built the store.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterStore<T> {
    /// (vocab, dim)
    pub token_embed: Array2<T>,
    /// (max_len, dim) learned positions
    pub pos_embed: Array2<T>,
    pub embed_ln: LayerNormParams<T>,
    pub layers: Vec<EncoderLayerParams<T>>,
    pub head: PairHeadParams<T>,
}

/// Borrowed view of one named tensor.
pub enum TensorView<'a, T> {
    Mat(&'a Array2<T>),
    Vec(&'a Array1<T>),
}

pub enum TensorViewMut<'a, T> {
    Mat(&'a mut Array2<T>),
    Vec(&'a mut Array1<T>),
}

impl<'a, T: Scalar> TensorView<'a, T> {
    pub fn shape(&self) -> Vec<usize> {
        match self {
            TensorView::Mat(a) => a.shape().to_vec(),
            TensorView::Vec(a) => a.shape().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorView::Mat(a) => a.len(),
            TensorView::Vec(a) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_slice(&self) -> &[T] {
        match self {
            TensorView::Mat(a) => a.as_slice().expect("parameters are standard layout"),
            TensorView::Vec(a) => a.as_slice().expect("parameters are standard layout"),
        }
    }
}

impl<'a, T: Scalar> TensorViewMut<'a, T> {
    pub fn as_slice_mut(&mut self) -> &mut [T] {
        match self {
            TensorViewMut::Mat(a) => a.as_slice_mut().expect("parameters are standard layout"),
            TensorViewMut::Vec(a) => a.as_slice_mut().expect("parameters are standard layout"),
        }
    }
}

impl<T: Scalar> ParameterStore<T> {
    /// All-zero store with the shapes of `cfg`; the shape authority for
    /// gradients, optimizer state, and checkpoint validation.
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let d = cfg.model_dim;
        let layers = (0..cfg.num_layers)
            .map(|_| EncoderLayerParams {
                attn: AttentionParams {
                    query: Linear::zeros(d, d),
                    key: Linear::zeros(d, d),
                    value: Linear::zeros(d, d),
                    output: Linear::zeros(d, d),
                },
                attn_ln: LayerNormParams::zeros(d),
                ff1: Linear::zeros(d, cfg.ff_dim),
                ff2: Linear::zeros(cfg.ff_dim, d),
                ff_ln: LayerNormParams::zeros(d),
            })
            .collect();
        ParameterStore {
            token_embed: Array2::zeros((cfg.vocab_size, d)),
            pos_embed: Array2::zeros((cfg.max_len, d)),
            embed_ln: LayerNormParams::zeros(d),
            layers,
            head: PairHeadParams {
                dense: Linear::zeros(cfg.head_in_dim(), d),
                out: Linear::zeros(d, cfg.num_classes),
            },
        }
    }

    /// Deterministic initialization from `cfg.seed`: weight matrices and
    /// embeddings N(0, 0.02), biases zero, layer-norm gains one.
    pub fn init(cfg: &ModelConfig) -> Self {
        let mut store = Self::zeros(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let normal = Normal::new(0.0f64, INIT_STD).expect("valid std");
        for (name, mut tensor) in store.visit_mut() {
            let is_weight = name.ends_with(".weight");
            let is_gain = name.ends_with(".gain");
            for v in tensor.as_slice_mut() {
                *v = if is_weight {
                    T::from_f64(normal.sample(&mut rng))
                } else if is_gain {
                    T::one()
                } else {
                    T::zero()
                };
            }
        }
        store
    }

    /// Named tensors in canonical order.
    pub fn visit(&self) -> Vec<(String, TensorView<'_, T>)> {
        let mut out: Vec<(String, TensorView<'_, T>)> = vec![
            ("embed.token.weight".into(), TensorView::Mat(&self.token_embed)),
            ("embed.pos.weight".into(), TensorView::Mat(&self.pos_embed)),
            ("embed.ln.gain".into(), TensorView::Vec(&self.embed_ln.gain)),
            ("embed.ln.bias".into(), TensorView::Vec(&self.embed_ln.bias)),
        ];
        for (i, layer) in self.layers.iter().enumerate() {
            let p = |suffix: &str| format!("layer{i}.{suffix}");
            out.push((p("attn.q.weight"), TensorView::Mat(&layer.attn.query.weight)));
            out.push((p("attn.q.bias"), TensorView::Vec(&layer.attn.query.bias)));
            out.push((p("attn.k.weight"), TensorView::Mat(&layer.attn.key.weight)));
            out.push((p("attn.k.bias"), TensorView::Vec(&layer.attn.key.bias)));
            out.push((p("attn.v.weight"), TensorView::Mat(&layer.attn.value.weight)));
            out.push((p("attn.v.bias"), TensorView::Vec(&layer.attn.value.bias)));
            out.push((p("attn.o.weight"), TensorView::Mat(&layer.attn.output.weight)));
            out.push((p("attn.o.bias"), TensorView::Vec(&layer.attn.output.bias)));
            out.push((p("attn_ln.gain"), TensorView::Vec(&layer.attn_ln.gain)));
            out.push((p("attn_ln.bias"), TensorView::Vec(&layer.attn_ln.bias)));
            out.push((p("ff.w1.weight"), TensorView::Mat(&layer.ff1.weight)));
            out.push((p("ff.w1.bias"), TensorView::Vec(&layer.ff1.bias)));
            out.push((p("ff.w2.weight"), TensorView::Mat(&layer.ff2.weight)));
            out.push((p("ff.w2.bias"), TensorView::Vec(&layer.ff2.bias)));
            out.push((p("ff_ln.gain"), TensorView::Vec(&layer.ff_ln.gain)));
            out.push((p("ff_ln.bias"), TensorView::Vec(&layer.ff_ln.bias)));
        }
        out.push(("head.dense.weight".into(), TensorView::Mat(&self.head.dense.weight)));
        out.push(("head.dense.bias".into(), TensorView::Vec(&self.head.dense.bias)));
        out.push(("head.out.weight".into(), TensorView::Mat(&self.head.out.weight)));
        out.push(("head.out.bias".into(), TensorView::Vec(&self.head.out.bias)));
        out
    }

    /// Mutable named tensors, same order as [`ParameterStore::visit`].
    pub fn visit_mut(&mut self) -> Vec<(String, TensorViewMut<'_, T>)> {
        let mut out: Vec<(String, TensorViewMut<'_, T>)> = vec![
            ("embed.token.weight".into(), TensorViewMut::Mat(&mut self.token_embed)),
            ("embed.pos.weight".into(), TensorViewMut::Mat(&mut self.pos_embed)),
            ("embed.ln.gain".into(), TensorViewMut::Vec(&mut self.embed_ln.gain)),
            ("embed.ln.bias".into(), TensorViewMut::Vec(&mut self.embed_ln.bias)),
        ];
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let p = |suffix: &str| format!("layer{i}.{suffix}");
            out.push((p("attn.q.weight"), TensorViewMut::Mat(&mut layer.attn.query.weight)));
            out.push((p("attn.q.bias"), TensorViewMut::Vec(&mut layer.attn.query.bias)));
            out.push((p("attn.k.weight"), TensorViewMut::Mat(&mut layer.attn.key.weight)));
            out.push((p("attn.k.bias"), TensorViewMut::Vec(&mut layer.attn.key.bias)));
            out.push((p("attn.v.weight"), TensorViewMut::Mat(&mut layer.attn.value.weight)));
            out.push((p("attn.v.bias"), TensorViewMut::Vec(&mut layer.attn.value.bias)));
            out.push((p("attn.o.weight"), TensorViewMut::Mat(&mut layer.attn.output.weight)));
            out.push((p("attn.o.bias"), TensorViewMut::Vec(&mut layer.attn.output.bias)));
            out.push((p("attn_ln.gain"), TensorViewMut::Vec(&mut layer.attn_ln.gain)));
            out.push((p("attn_ln.bias"), TensorViewMut::Vec(&mut layer.attn_ln.bias)));
            out.push((p("ff.w1.weight"), TensorViewMut::Mat(&mut layer.ff1.weight)));
            out.push((p("ff.w1.bias"), TensorViewMut::Vec(&mut layer.ff1.bias)));
            out.push((p("ff.w2.weight"), TensorViewMut::Mat(&mut layer.ff2.weight)));
            out.push((p("ff.w2.bias"), TensorViewMut::Vec(&mut layer.ff2.bias)));
            out.push((p("ff_ln.gain"), TensorViewMut::Vec(&mut layer.ff_ln.gain)));
            out.push((p("ff_ln.bias"), TensorViewMut::Vec(&mut layer.ff_ln.bias)));
        }
        out.push(("head.dense.weight".into(), TensorViewMut::Mat(&mut self.head.dense.weight)));
        out.push(("head.dense.bias".into(), TensorViewMut::Vec(&mut self.head.dense.bias)));
        out.push(("head.out.weight".into(), TensorViewMut::Mat(&mut self.head.out.weight)));
        out.push(("head.out.bias".into(), TensorViewMut::Vec(&mut self.head.out.bias)));
        out
    }

    pub fn num_params(&self) -> usize {
        self.visit().iter().map(|(_, t)| t.len()).sum()
    }

    /// Elementwise accumulate, used to reduce per-sample gradients.
    pub fn add_assign(&mut self, other: &Self) {
        let theirs = other.visit();
        for ((_, mut mine), (_, their)) in self.visit_mut().into_iter().zip(theirs) {
            let src = their.as_slice();
            for (d, s) in mine.as_slice_mut().iter_mut().zip(src) {
                *d += *s;
            }
        }
    }

    pub fn scale(&mut self, factor: T) {
        for (_, mut tensor) in self.visit_mut() {
            for v in tensor.as_slice_mut() {
                *v *= factor;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.visit()
            .iter()
            .all(|(_, t)| t.as_slice().iter().all(|v| v.is_finite()))
    }

    /// Casts every element; `f64 -> f32` rounds, `f32 -> f64` is exact.
    pub fn cast<U: Scalar>(&self) -> ParameterStore<U> {
        fn cast2<T: Scalar, U: Scalar>(a: &Array2<T>) -> Array2<U> {
            a.mapv(|v| U::from_f64(v.to_f64()))
        }
        fn cast1<T: Scalar, U: Scalar>(a: &Array1<T>) -> Array1<U> {
            a.mapv(|v| U::from_f64(v.to_f64()))
        }
        ParameterStore {
            token_embed: cast2(&self.token_embed),
            pos_embed: cast2(&self.pos_embed),
            embed_ln: LayerNormParams {
                gain: cast1(&self.embed_ln.gain),
                bias: cast1(&self.embed_ln.bias),
            },
            layers: self
                .layers
                .iter()
                .map(|l| EncoderLayerParams {
                    attn: AttentionParams {
                        query: Linear {
                            weight: cast2(&l.attn.query.weight),
                            bias: cast1(&l.attn.query.bias),
                        },
                        key: Linear {
                            weight: cast2(&l.attn.key.weight),
                            bias: cast1(&l.attn.key.bias),
                        },
                        value: Linear {
                            weight: cast2(&l.attn.value.weight),
                            bias: cast1(&l.attn.value.bias),
                        },
                        output: Linear {
                            weight: cast2(&l.attn.output.weight),
                            bias: cast1(&l.attn.output.bias),
                        },
                    },
                    attn_ln: LayerNormParams {
                        gain: cast1(&l.attn_ln.gain),
                        bias: cast1(&l.attn_ln.bias),
                    },
                    ff1: Linear {
                        weight: cast2(&l.ff1.weight),
                        bias: cast1(&l.ff1.bias),
                    },
                    ff2: Linear {
                        weight: cast2(&l.ff2.weight),
                        bias: cast1(&l.ff2.bias),
                    },
                    ff_ln: LayerNormParams {
                        gain: cast1(&l.ff_ln.gain),
                        bias: cast1(&l.ff_ln.bias),
                    },
                })
                .collect(),
            head: PairHeadParams {
                dense: Linear {
                    weight: cast2(&self.head.dense.weight),
                    bias: cast1(&self.head.dense.bias),
                },
                out: Linear {
                    weight: cast2(&self.head.out.weight),
                    bias: cast1(&self.head.out.bias),
                },
            },
        }
    }
}

/// Canonical (name, shape) list for a configuration.
pub fn expected_shapes<T: Scalar>(cfg: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    ParameterStore::<T>::zeros(cfg)
        .visit()
        .into_iter()
        .map(|(name, t)| (name, t.shape()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seed_deterministic() {
        let cfg = ModelConfig::tiny(10, 16, 5);
        let a = ParameterStore::<f64>::init(&cfg);
        let b = ParameterStore::<f64>::init(&cfg);
        assert_eq!(a, b);
        let c = ParameterStore::<f64>::init(&ModelConfig::tiny(10, 16, 6));
        assert_ne!(a, c);
    }

    #[test]
    fn gains_one_biases_zero_at_init() {
        let cfg = ModelConfig::tiny(10, 16, 0);
        let store = ParameterStore::<f64>::init(&cfg);
        assert!(store.embed_ln.gain.iter().all(|&v| v == 1.0));
        assert!(store.embed_ln.bias.iter().all(|&v| v == 0.0));
        assert!(store.layers[0].attn.query.bias.iter().all(|&v| v == 0.0));
        assert!(store.head.out.bias.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn desk_parameter_count_matches_closed_form() {
        // independent shape arithmetic for the desk default
        let vocab = 31;
        let (len, layers, d, ff, classes) = (512usize, 2usize, 64usize, 256usize, 2usize);
        let per_layer = 4 * (d * d + d) + 2 * d + (d * ff + ff) + (ff * d + d) + 2 * d;
        let expected = vocab * d + len * d + 2 * d + layers * per_layer
            + (2 * d * d + d)
            + (d * classes + classes);
        let cfg = ModelConfig::desk_default(vocab, 0);
        let store = ParameterStore::<f32>::init(&cfg);
        assert_eq!(store.num_params(), expected);
        assert_eq!(store.num_params(), 143_234);
    }

    #[test]
    fn visit_orders_agree() {
        let cfg = ModelConfig::tiny(10, 16, 0);
        let mut store = ParameterStore::<f64>::init(&cfg);
        let names: Vec<String> = store.visit().into_iter().map(|(n, _)| n).collect();
        let names_mut: Vec<String> = store.visit_mut().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, names_mut);
        assert!(names.contains(&"layer0.attn.q.weight".to_owned()));
    }

    #[test]
    fn add_assign_and_scale() {
        let cfg = ModelConfig::tiny(4, 8, 1);
        let mut a = ParameterStore::<f64>::init(&cfg);
        let b = a.clone();
        a.add_assign(&b);
        a.scale(0.5);
        assert_eq!(a, b);
    }

    #[test]
    fn cast_round_trips_f32() {
        let cfg = ModelConfig::tiny(4, 8, 2);
        let a = ParameterStore::<f32>::init(&cfg);
        let b: ParameterStore<f32> = a.cast::<f64>().cast::<f32>();
        assert_eq!(a, b);
    }
}
