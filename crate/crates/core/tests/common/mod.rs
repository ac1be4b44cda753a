#![allow(dead_code)]

pub mod stub_http;
pub mod stub_linter;
