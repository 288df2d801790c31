//! Name-keyed factories for the interchangeable pieces (potentials, heat
//! kernel evaluators, spectral functions). A spec string has the form
//! `name` or `name:args`, where `args` is usually `key=value` pairs separated
//! by commas.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Arguments following the `:` of a spec string.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    raw: String,
}

impl Params {
    pub fn new(raw: impl Into<String>) -> Self {
        Self { raw: raw.into() }
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn is_empty(&self) -> bool {
        self.raw.trim().is_empty()
    }

    fn pairs(&self) -> Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for part in self.raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got `{part}`")))?;
            out.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(out)
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.pairs()?.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| Error::Config(format!("`{key}` is not a number: `{v}`"))),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.get_f64(key)?
            .ok_or_else(|| Error::Config(format!("missing parameter `{key}`")))
    }

    /// Rejects keys outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<()> {
        for k in self.pairs()?.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown parameter `{k}`")));
            }
        }
        Ok(())
    }
}

/// Splits `name:args` into the name and its [`Params`].
pub fn split_spec(spec: &str) -> (&str, Params) {
    match spec.split_once(':') {
        Some((n, a)) => (n.trim(), Params::new(a)),
        None => (spec.trim(), Params::default()),
    }
}

pub type Factory<C, T> = fn(&C, &Params) -> Result<T>;

pub struct Registry<C, T> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Factory<C, T>>,
}

impl<C, T> Registry<C, T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, factory: Factory<C, T>) -> &mut Self {
        self.entries.insert(name, factory);
        self
    }

    pub fn with(mut self, name: &'static str, factory: Factory<C, T>) -> Self {
        self.register(name, factory);
        self
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    /// Builds the entry named by `spec` (`name` or `name:args`).
    pub fn build(&self, ctx: &C, spec: &str) -> Result<T> {
        let (name, params) = split_spec(spec);
        let factory = self.entries.get(name).ok_or_else(|| Error::UnknownName {
            kind: self.kind,
            name: name.to_string(),
        })?;
        factory(ctx, &params)
    }
}
