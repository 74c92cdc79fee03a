//! Error categories and their exit codes.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Config,
    Data,
    Runtime,
}

impl Kind {
    pub fn code(self) -> u8 {
        match self {
            Kind::Config => 2,
            Kind::Data => 3,
            Kind::Runtime => 4,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub msg: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl std::error::Error for Failure {}

pub fn config(msg: impl Into<String>) -> anyhow::Error {
    Failure {
        kind: Kind::Config,
        msg: msg.into(),
    }
    .into()
}

pub fn data(msg: impl Into<String>) -> anyhow::Error {
    Failure {
        kind: Kind::Data,
        msg: msg.into(),
    }
    .into()
}

fn kind_of(e: &g2sqg::Error) -> Kind {
    use g2sqg::Error::*;
    match e {
        Config(_) => Kind::Config,
        Record { .. } | Data(_) | MissingDependencies(_) | Checkpoint(_) | Io(_) | Json(_) => Kind::Data,
        _ => Kind::Runtime,
    }
}

/// 2 for configuration, 3 for data and 4 for runtime failures.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return f.kind.code();
        }
        if let Some(g) = cause.downcast_ref::<g2sqg::Error>() {
            return kind_of(g).code();
        }
    }
    Kind::Runtime.code()
}
