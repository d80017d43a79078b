#![no_std]

extern crate alloc;

pub mod entropy;
pub mod ingest;
pub mod model;
pub mod parsers;
pub mod phi;
pub mod prefs;
pub mod report;
pub mod scan;
pub mod sqlite;
pub mod time;
pub mod timeline;
