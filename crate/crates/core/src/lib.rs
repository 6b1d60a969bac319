pub mod graph;
pub mod lp;
pub mod master;
pub mod solution;
pub mod pricing;
pub mod enumeration;
pub mod cuts;
pub mod driver;
pub mod oracle;
pub mod io;
