# Utilities: errors, configuration, logging and report formatting
