pub mod corpus;
pub mod evaluate;
pub mod explain;
pub mod featurize;
pub mod learn;
pub mod pipeline;
pub mod seed;
pub mod select;
pub mod syntax;
pub mod synth;
