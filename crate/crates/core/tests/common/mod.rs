#![allow(dead_code)]

pub mod mef;
