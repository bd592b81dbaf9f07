"""Pipeline stages invoked by the command line: validate, simulate, analyze, report."""
