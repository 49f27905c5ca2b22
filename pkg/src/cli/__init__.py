# Command Line Interface package
