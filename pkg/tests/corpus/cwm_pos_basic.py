# expect: CondWoMeas:7
from qiskit import ClassicalRegister, QuantumCircuit, QuantumRegister, transpile
qr = QuantumRegister(2)
cr = ClassicalRegister(1)
qc = QuantumCircuit(qr, cr)
qc.h(0)
qc.x(1).c_if(cr, 1)
qc.measure(1, 0)
