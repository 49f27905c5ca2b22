# Scheduling, cycle mapping and device compilation
