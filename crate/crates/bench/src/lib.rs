pub mod config;
pub mod experiments;
pub mod instance;
pub mod record;
