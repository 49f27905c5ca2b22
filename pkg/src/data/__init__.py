# Scenario files and generators
