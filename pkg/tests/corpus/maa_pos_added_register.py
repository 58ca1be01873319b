# expect: MeasAllAbuse:8
from qiskit import ClassicalRegister, QuantumCircuit, QuantumRegister, transpile
qc = QuantumCircuit(2)
cr = ClassicalRegister(2, "c")
qc.add_register(cr)
qc.h(0)
qc.cx(0, 1)
qc.measure_all()
