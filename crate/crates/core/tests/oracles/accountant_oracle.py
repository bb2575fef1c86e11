"""High-precision reference values for the accountant tests (mpmath, 50 digits)."""
from mpmath import mp, mpf, log, sqrt, exp, e
mp.dps = 50
def comp(eps, slack):
    s=sum(eps); t=sum(x*(exp(x)-1)/(exp(x)+1) for x in eps); sq=sum(x*x for x in eps)
    b = t+sqrt(2*sq*log(e+sqrt(sq)/slack)); c=t+sqrt(2*sq*log(1/slack))
    return s,b,c
print("compose 1000x0.01", comp([mpf('0.01')]*1000, mpf('1e-6')))
L=lambda d: log(1/(2*d))
d=1/(2*e)
print("eps1", (1+sqrt(1+2*1*L(d)))/1)
print("eps_step k=3", 1/sqrt(4)+sqrt((1+2*L(d))/4))
print("thm1 8", log(8)**2, mpf(8)**-4, "thm1 2", log(2)**2)
T=mpf(10)**4
print("bound", log(T)**2 + sqrt(5*T*log(5)))
def eps_step(k, ds): return 1/sqrt(k+1)+sqrt((1+2*L(ds))/(k+1))
for T in [4]+[2**i for i in range(8,15)]:
    ds=mpf(T)**-5/2; sl=mpf(T)**-4/2
    eps=[eps_step(k,ds) for k in range(T)]
    s,b,c=comp(eps,sl)
    dt=1-(1-sl)*(1-ds)**T
    m=min(s,b,c)
    print(T, "a",mp.nstr(s,17),"b",mp.nstr(b,17),"c",mp.nstr(c,17), "ratio", mp.nstr(m/log(T)**2,8), "dt<=T^-4", dt<=mpf(T)**-4)
