# expect: none
from qiskit import ClassicalRegister, QuantumCircuit, QuantumRegister, transpile


def finish(circuit):
    circuit.h(2)


qc = QuantumCircuit(3)
qc.h(0)
qc.cx(0, 1)
finish(qc)
