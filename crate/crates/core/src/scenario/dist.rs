//! Flat layout of conditional distributions `P(a_1 … a_n | x_1 … x_n)`.

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::rational::Q;

/// Mixed-radix index contract: `index = out · ∏ in_cards + in`, where both
/// multi-indices are lexicographic with the first slot most significant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layout {
    pub out_cards: Vec<usize>,
    pub in_cards: Vec<usize>,
}

impl Layout {
    pub fn new(out_cards: Vec<usize>, in_cards: Vec<usize>) -> Self {
        Layout { out_cards, in_cards }
    }

    pub fn n_out(&self) -> usize {
        self.out_cards.iter().product()
    }

    pub fn n_in(&self) -> usize {
        self.in_cards.iter().product()
    }

    pub fn len(&self) -> usize {
        self.n_out() * self.n_in()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, outs: &[usize], ins: &[usize]) -> usize {
        encode(outs, &self.out_cards) * self.n_in() + encode(ins, &self.in_cards)
    }

    pub fn decode(&self, idx: usize) -> (Vec<usize>, Vec<usize>) {
        let n_in = self.n_in();
        (decode(idx / n_in, &self.out_cards), decode(idx % n_in, &self.in_cards))
    }

    /// All output assignments in index order.
    pub fn outputs(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.n_out()).map(|i| decode(i, &self.out_cards))
    }

    /// All input assignments in index order.
    pub fn inputs(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.n_in()).map(|i| decode(i, &self.in_cards))
    }
}

pub fn encode(digits: &[usize], cards: &[usize]) -> usize {
    digits.iter().zip(cards).fold(0, |acc, (&d, &c)| acc * c + d)
}

pub fn decode(mut idx: usize, cards: &[usize]) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    for (d, &c) in out.iter_mut().zip(cards).rev() {
        *d = idx % c;
        idx /= c;
    }
    out
}

/// Exact conditional distribution over named output and input slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CondDistribution {
    pub output_names: Vec<String>,
    pub input_names: Vec<String>,
    pub layout: Layout,
    pub values: Vec<Q>,
}

impl CondDistribution {
    /// Validates non-negativity and per-input normalization.
    pub fn new(
        output_names: Vec<String>,
        input_names: Vec<String>,
        layout: Layout,
        values: Vec<Q>,
    ) -> Result<Self, ScenarioError> {
        if values.len() != layout.len() {
            return Err(ScenarioError::Invalid(format!(
                "distribution has {} entries, layout needs {}",
                values.len(),
                layout.len()
            )));
        }
        if values.iter().any(Q::is_negative) {
            return Err(ScenarioError::Invalid("negative probability".into()));
        }
        let d = CondDistribution {
            output_names,
            input_names,
            layout,
            values,
        };
        for x in 0..d.layout.n_in() {
            let ins = decode(x, &d.layout.in_cards);
            let total: Q = d.layout.outputs().map(|o| d.get(&o, &ins).clone()).sum();
            if !total.is_one() {
                return Err(ScenarioError::Invalid(format!(
                    "outputs sum to {total} for inputs {ins:?}"
                )));
            }
        }
        Ok(d)
    }

    pub fn get(&self, outs: &[usize], ins: &[usize]) -> &Q {
        &self.values[self.layout.index(outs, ins)]
    }

    /// Sums over dropped output slots and removes dropped input slots. Fails
    /// unless the kept marginal is the same for every value of the dropped
    /// inputs.
    pub fn marginalize(&self, keep_outputs: &[usize], keep_inputs: &[usize]) -> Result<CondDistribution, ScenarioError> {
        for &i in keep_outputs {
            if i >= self.layout.out_cards.len() {
                return Err(ScenarioError::BadReference(format!("output slot {i}")));
            }
        }
        for &i in keep_inputs {
            if i >= self.layout.in_cards.len() {
                return Err(ScenarioError::BadReference(format!("input slot {i}")));
            }
        }
        let layout = Layout::new(
            keep_outputs.iter().map(|&i| self.layout.out_cards[i]).collect(),
            keep_inputs.iter().map(|&i| self.layout.in_cards[i]).collect(),
        );
        let mut values: Vec<Option<Q>> = vec![None; layout.len()];
        for ins in self.layout.inputs() {
            let mut block = vec![Q::zero(); layout.n_out()];
            for outs in self.layout.outputs() {
                let k: Vec<usize> = keep_outputs.iter().map(|&i| outs[i]).collect();
                block[encode(&k, &layout.out_cards)] += self.get(&outs, &ins);
            }
            let kin: Vec<usize> = keep_inputs.iter().map(|&i| ins[i]).collect();
            let kin_idx = encode(&kin, &layout.in_cards);
            for (o, v) in block.into_iter().enumerate() {
                let slot = &mut values[o * layout.n_in() + kin_idx];
                match slot {
                    None => *slot = Some(v),
                    Some(prev) if *prev != v => {
                        return Err(ScenarioError::IllDefinedMarginal);
                    }
                    _ => {}
                }
            }
        }
        Ok(CondDistribution {
            output_names: keep_outputs.iter().map(|&i| self.output_names[i].clone()).collect(),
            input_names: keep_inputs.iter().map(|&i| self.input_names[i].clone()).collect(),
            layout,
            values: values.into_iter().map(Option::unwrap).collect(),
        })
    }

    /// Joint distribution `P(outputs, inputs)` for the given input weights
    /// (one weight per input assignment, summing to one).
    pub fn joint(&self, input_weights: &[Q]) -> Vec<Q> {
        let n_in = self.layout.n_in();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * &input_weights[i % n_in])
            .collect()
    }

    pub fn uniform_inputs(&self) -> Vec<Q> {
        let n = self.layout.n_in() as i64;
        vec![Q::new(1, n); n as usize]
    }
}
