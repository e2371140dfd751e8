pub mod oracle;
pub mod workflows;
