use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("regex syntax error at byte {position}: {message}")]
    RegexSyntax { position: usize, message: String },

    #[error("query syntax error on line {line}: {message}")]
    QuerySyntax { line: usize, message: String },

    #[error("graph format error on line {line}: {message}")]
    GraphFormat { line: usize, message: String },

    #[error("symbol {0} already occurs in the alphabet")]
    SymbolCollision(String),

    #[error("query is not acyclic: {0}")]
    Cyclic(String),

    #[error("variable {0} does not occur in the query")]
    UnknownVariable(String),

    #[error("restriction cap mismatch: table has {table}, requested {requested}")]
    CapMismatch { table: usize, requested: usize },

    #[error("tail variables overlap: {0}")]
    OverlappingTails(String),

    #[error("query shape not supported here: {0}")]
    Shape(String),

    #[error("edge-cover search too large: {edges} edges (limit {limit})")]
    CoverTooLarge { edges: usize, limit: usize },

    #[error("target variable {0} is not covered by any edge")]
    Uncoverable(String),

    #[error("resource guard exceeded: {rows} intermediate rows (limit {limit})")]
    ResourceGuard { rows: usize, limit: usize },

    #[error("schema hypergraph is not alpha-acyclic")]
    NotAlphaAcyclic,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
