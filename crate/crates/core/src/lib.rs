pub mod arxiv_id;
pub mod authors;
pub mod citegraph;
pub mod cli;
pub mod corpus;
pub mod learn;
pub mod oai_harvest;
pub mod par;
