m, n = map(int, input().split())
sum = 0
i = 0
while i < n:
  sum += m
  i += 1
print (sum)
