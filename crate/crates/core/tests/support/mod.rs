pub mod polya;
