"""Case-study protocols: ring leader election, primary-backup replication
and signature-based authentication against a symbolic attacker."""
