//! Evaluation of acyclic conjunctive regular path queries (CRPQs) over
//! edge-labeled graphs, in time that depends on the output size rather than
//! on the size of the materialized atom relations.

pub mod baseline;
pub mod bench;
pub mod error;
pub mod freeleaf;
pub mod graph;
pub mod hypergraph;
pub mod join;
pub mod nfa;
pub mod planner;
pub mod product;
pub mod query;
pub mod regex;
pub mod restriction;
pub mod width;
pub mod workload;

pub use error::{Error, Result};
pub use graph::{load_graph, GraphView, LabeledGraph, VertexId, VertexSet};
pub use join::BindingRelation;
pub use planner::{evaluate, Engine, EvalOptions, EvalReport};
pub use query::{parse_query, Atom, Crpq, Var};
pub use regex::{parse_regex, Label, Regex};
pub use width::{fn_fhtw, WidthReport};
