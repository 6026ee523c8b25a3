pub mod corpus;
pub mod search;
pub mod tokens;
pub mod tools;
pub mod conversation;
pub mod agent;
pub mod eval;
