/// Named neighborhood settings for different data regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Profile {
    /// Millions of samples with many images per identity.
    LargeDense,
    /// Tens of thousands of samples.
    Medium,
    /// Few samples per class.
    SmallSparse,
}

impl Profile {
    pub fn k(self) -> usize {
        match self {
            Profile::LargeDense => 80,
            Profile::Medium => 40,
            Profile::SmallSparse => 5,
        }
    }

    /// Dense neighborhoods need a steeper rank weighting.
    pub fn power(self) -> f64 {
        match self {
            Profile::LargeDense | Profile::Medium => 5.0,
            Profile::SmallSparse => 1.0,
        }
    }
}

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_POWER: f64 = 5.0;

/// Explicit flag, then profile, then the model's training `k`, then
/// [`DEFAULT_K`].
pub fn resolve_k(flag: Option<usize>, profile: Option<Profile>, trained: Option<usize>) -> usize {
    flag.or(profile.map(Profile::k)).or(trained).unwrap_or(DEFAULT_K)
}

/// Explicit flag, then profile, then [`DEFAULT_POWER`].
pub fn resolve_power(flag: Option<f64>, profile: Option<Profile>) -> f64 {
    flag.or(profile.map(Profile::power)).unwrap_or(DEFAULT_POWER)
}
