//! One front end over the three classifiers.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ann::{ann_forward, ann_train, AnnModel, AnnTrainConfig};
use crate::dataset::{balance_by_duplication, LabeledSet};
use crate::framing::Class;
use crate::pln::{pln_predict, train_pln, PlnConfig, PlnModel};
use crate::rng::derive_seed;
use crate::svm::{svm_predict, svm_train, SvmModel, SvmTrainConfig};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "PLN")]
    Pln,
    #[serde(rename = "SVM")]
    Svm,
    #[serde(rename = "ANN")]
    Ann,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Pln, Algorithm::Svm, Algorithm::Ann];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pln => "PLN",
            Algorithm::Svm => "SVM",
            Algorithm::Ann => "ANN",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pln" => Ok(Algorithm::Pln),
            "svm" => Ok(Algorithm::Svm),
            "ann" => Ok(Algorithm::Ann),
            _ => Err(Error::InvalidConfig(alloc::format!("unknown algorithm {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainConfigs {
    pub pln: PlnConfig,
    pub svm: SvmTrainConfig,
    pub ann: AnnTrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "model")]
pub enum TrainedModel {
    #[serde(rename = "PLN")]
    Pln(PlnModel),
    #[serde(rename = "SVM")]
    Svm(SvmModel),
    #[serde(rename = "ANN")]
    Ann(AnnModel),
}

impl TrainedModel {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            TrainedModel::Pln(_) => Algorithm::Pln,
            TrainedModel::Svm(_) => Algorithm::Svm,
            TrainedModel::Ann(_) => Algorithm::Ann,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TrainedModel::Pln(m) => m.dim(),
            TrainedModel::Svm(m) => m.normalizer.dim(),
            TrainedModel::Ann(m) => m.normalizer.dim(),
        }
    }

    pub fn normalizer(&self) -> &crate::dataset::Normalizer {
        match self {
            TrainedModel::Pln(m) => &m.normalizer,
            TrainedModel::Svm(m) => &m.normalizer,
            TrainedModel::Ann(m) => &m.normalizer,
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<Class>> {
        match self {
            TrainedModel::Pln(m) => pln_predict(m, x).map(|p| p.1),
            TrainedModel::Svm(m) => svm_predict(m, x).map(|p| p.1),
            TrainedModel::Ann(m) => ann_forward(m, x).map(|p| p.1),
        }
    }
}

/// Trains `algorithm` on an unbalanced training set.
///
/// SVM and ANN see the set after duplication balancing. The PLN trainer
/// receives it unbalanced: it carves out its validation split first and
/// balances only the remainder, so no duplicate straddles the two.
pub fn train(algorithm: Algorithm, train: &LabeledSet, configs: &TrainConfigs, seed: u64) -> Result<TrainedModel> {
    match algorithm {
        Algorithm::Pln => {
            let cfg = PlnConfig { seed, ..configs.pln.clone() };
            train_pln(train, &cfg).map(TrainedModel::Pln)
        }
        Algorithm::Svm => {
            let balanced = balance_by_duplication(train, derive_seed(seed, 7))?;
            let cfg = SvmTrainConfig { seed, ..configs.svm };
            svm_train(&balanced, &cfg).map(TrainedModel::Svm)
        }
        Algorithm::Ann => {
            let balanced = balance_by_duplication(train, derive_seed(seed, 7))?;
            let cfg = AnnTrainConfig { seed, ..configs.ann };
            ann_train(&balanced, &cfg).map(TrainedModel::Ann)
        }
    }
}

/// Lower-case algorithm names accepted by [`Algorithm::from_str`].
pub fn algorithm_names() -> Vec<String> {
    Algorithm::ALL.iter().map(|a| a.name().to_ascii_lowercase()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framing::FrameConfig;
    use crate::synth::{generate_cohort, SynthConfig};

    #[test]
    fn names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("knn".parse::<Algorithm>().is_err());
        assert_eq!(algorithm_names(), ["pln", "svm", "ann"]);
    }

    #[test]
    fn every_algorithm_trains_on_a_small_cohort() {
        let cfg = SynthConfig {
            patients: 2,
            minutes_per_patient: 1500,
            target_minority_fraction: 0.01,
            seed: 4,
            ..SynthConfig::easy()
        };
        let cohort = generate_cohort(&cfg).unwrap();
        let set = LabeledSet::from_records(&cohort, &FrameConfig::default()).unwrap();
        let mut configs = TrainConfigs::default();
        configs.ann.epochs = 2;
        configs.ann.hidden = 16;
        configs.pln.n_max = 200;
        configs.pln.l_max = 2;
        for a in Algorithm::ALL {
            let m = train(a, &set, &configs, 11).unwrap();
            assert_eq!(m.algorithm(), a);
            assert_eq!(m.dim(), 30);
            assert_eq!(m.predict(&set.x).unwrap().len(), set.len());
        }
    }
}
