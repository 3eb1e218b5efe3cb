pub mod cli;
pub mod costs;
pub mod dual;
pub mod io;
pub mod measures;
pub mod optim;
pub mod order;
pub mod primal;
pub mod validate;
