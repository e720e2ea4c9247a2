pub mod pr_oracle;
